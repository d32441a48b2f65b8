"""Plain-text artifacts: complex matrix files and key-value config files.

Matrix format::

    N_r N_t
    re+imj re+imj ...        (N_r lines of N_t entries)

All floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.

Config format: one ``key = value`` assignment per line, ``#`` comments and
blank lines ignored.  Keys may nest with dots and indexed lists, e.g.::

    nt = 8
    spacing = 0.5
    paths[0].eta = 0.2
    paths[0].phase = 0.0

List indices must fill 0..k-1 contiguously.  Values parse as int, then float,
then bare string.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError


def format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def matrix_to_text(matrix: np.ndarray) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    n_rx, n_tx = matrix.shape
    lines = [f"{n_rx} {n_tx}"]
    for row in matrix:
        lines.append(" ".join(format_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def matrix_from_text(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"matrix header must be 'N_r N_t', got {lines[0]!r}")
    n_rx, n_tx = int(header[0]), int(header[1])
    if len(lines) != n_rx + 1:
        raise ValueError(f"expected {n_rx} matrix rows, got {len(lines) - 1}")
    out = np.empty((n_rx, n_tx), dtype=complex)
    for i, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != n_tx:
            raise ValueError(f"row {i} has {len(tokens)} entries, expected {n_tx}")
        out[i] = [complex(tok) for tok in tokens]
    if not np.all(np.isfinite(out)):
        raise ValueError("matrix file contains non-finite entries")
    return out


def write_matrix(path, matrix: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(matrix_to_text(matrix))


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_text(fh.read())


_KEY_SEGMENT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\[(\d+)\])?$")


def parse_scalar(raw: str):
    """Interpret a config value: int, else float, else bare string."""
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config(text: str) -> dict:
    """Parse config text into nested dicts and lists.

    Raises
    ------
    ConfigError
        On malformed lines, bad keys, duplicate assignments, or list indices
        that leave gaps.
    """
    root: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw_value = line.split("=", 1)
        _assign(root, key.strip(), parse_scalar(raw_value), lineno)
    _check_lists(root, "")
    return root


def _assign(root: dict, dotted: str, value, lineno: int) -> None:
    segments = dotted.split(".")
    node = root
    for depth, segment in enumerate(segments):
        match = _KEY_SEGMENT.match(segment.strip())
        if match is None:
            raise ConfigError(f"line {lineno}: malformed key segment {segment!r}")
        name, index = match.group(1), match.group(2)
        last = depth == len(segments) - 1

        if index is None:
            target, slot = node, name
        else:
            items = node.setdefault(name, {})
            if not isinstance(items, dict) or (items and not all(
                isinstance(k, int) for k in items
            )):
                raise ConfigError(f"line {lineno}: {name!r} is both list and scalar")
            target, slot = items, int(index)

        if last:
            if slot in target:
                raise ConfigError(f"line {lineno}: duplicate key {dotted!r}")
            target[slot] = value
        else:
            node = target.setdefault(slot, {})
            if not isinstance(node, dict):
                raise ConfigError(
                    f"line {lineno}: key {dotted!r} descends through a scalar"
                )


def _check_lists(node, path: str) -> None:
    """Convert integer-keyed dicts to lists in place, requiring 0..k-1."""
    if not isinstance(node, dict):
        return
    for key, child in list(node.items()):
        child_path = f"{path}.{key}".lstrip(".")
        if isinstance(child, dict) and child and all(isinstance(k, int) for k in child):
            indices = sorted(child)
            if indices != list(range(len(indices))):
                raise ConfigError(
                    f"list {child_path!r} has gaps: indices {indices}"
                )
            seq = [child[i] for i in indices]
            for i, item in enumerate(seq):
                _check_lists(item, f"{child_path}[{i}]")
            node[key] = seq
        else:
            _check_lists(child, child_path)


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())
