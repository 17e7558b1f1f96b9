"""File formats: Matrix Market matrices, plain-text vectors, JSON run
configs, CSV traces, and the synthetic instance generator.

All floating-point output uses the shortest decimal that round-trips to
the same binary64 value (Python's repr), so write-then-read is the
identity bit for bit and generated files are byte-identical across runs
with the same seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LpProblem, SolverConfig
from .losses import LeastSquares, Logistic, Quadratic, SmoothLoss

TRACE_HEADER = "k,F,f,step_norm,residual,support_size,eps_max,sign_hash"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class FileFormatError(ValueError):
    """A data file failed to parse; the message carries line/column."""


class ConfigError(ValueError):
    """A run configuration is malformed or violates an invariant."""


def _fmt(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# Matrix Market (real, general; array and coordinate formats)

def write_matrix_market(path, M) -> None:
    """Write a dense matrix in Matrix Market array format."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    m, n = M.shape
    lines = ["%%MatrixMarket matrix array real general", f"{m} {n}"]
    # array format is column-major
    lines.extend(_fmt(M[i, j]) for j in range(n) for i in range(m))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_err(path, lineno: int, col: int, msg: str) -> FileFormatError:
    return FileFormatError(f"{path}:{lineno}:{col}: {msg}")


def _float_token(path, lineno: int, line: str, tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        col = line.find(tok) + 1
        raise _parse_err(path, lineno, col, f"invalid real literal {tok!r}") from None


def read_matrix_market(path) -> np.ndarray:
    """Read a real general Matrix Market file (array or coordinate)."""
    path = Path(path)
    with open(path) as fh:
        numbered = [(i, ln.strip()) for i, ln in enumerate(fh, start=1)]
    if not numbered:
        raise _parse_err(path, 1, 1, "empty file")
    lineno, header = numbered[0]
    parts = header.split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket" or parts[1] != "matrix":
        raise _parse_err(path, lineno, 1, f"malformed header {header!r}")
    fmt, field, symmetry = parts[2].lower(), parts[3].lower(), parts[4].lower()
    if fmt not in ("array", "coordinate"):
        raise _parse_err(path, lineno, 1, f"unsupported format {fmt!r}")
    if field != "real" or symmetry != "general":
        raise _parse_err(
            path, lineno, 1, f"only real general matrices are supported, got {field} {symmetry}"
        )
    body = [(i, ln) for i, ln in numbered[1:] if ln and not ln.startswith("%")]
    if not body:
        raise _parse_err(path, lineno, 1, "missing size line")
    lineno, size_line = body[0]
    toks = size_line.split()
    expected_sizes = 2 if fmt == "array" else 3
    if len(toks) != expected_sizes or not all(t.isdigit() for t in toks):
        raise _parse_err(path, lineno, 1, f"malformed size line {size_line!r}")
    if fmt == "array":
        m, n = int(toks[0]), int(toks[1])
        values: list[float] = []
        for lineno, ln in body[1:]:
            for tok in ln.split():
                values.append(_float_token(path, lineno, ln, tok))
        if len(values) != m * n:
            raise _parse_err(
                path, lineno if body[1:] else 1, 1,
                f"expected {m * n} entries, found {len(values)}",
            )
        return np.array(values).reshape((n, m)).T.copy()
    m, n, nnz = int(toks[0]), int(toks[1]), int(toks[2])
    M = np.zeros((m, n))
    entries = body[1:]
    if len(entries) != nnz:
        raise _parse_err(path, lineno, 1, f"expected {nnz} entries, found {len(entries)}")
    for lineno, ln in entries:
        toks = ln.split()
        if len(toks) != 3:
            raise _parse_err(path, lineno, 1, f"malformed coordinate entry {ln!r}")
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise _parse_err(path, lineno, 1, f"invalid indices in {ln!r}") from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise _parse_err(path, lineno, 1, f"index ({i}, {j}) out of bounds")
        M[i - 1, j - 1] = _float_token(path, lineno, ln, toks[2])
    return M


# ---------------------------------------------------------------------------
# Plain-text vectors: one decimal literal per line

def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    Path(path).write_text("\n".join(_fmt(x) for x in v) + "\n")


def read_vector(path) -> np.ndarray:
    path = Path(path)
    values = []
    with open(path) as fh:
        for lineno, ln in enumerate(fh, start=1):
            tok = ln.strip()
            if not tok:
                continue
            values.append(_float_token(path, lineno, ln, tok))
    if not values:
        raise _parse_err(path, 1, 1, "empty vector file")
    return np.array(values)


# ---------------------------------------------------------------------------
# Run configuration

_LOSS_KINDS = ("least_squares", "logistic", "quadratic")
_TOP_KEYS = {
    "loss", "lambda", "p", "beta", "mu", "eps0", "max_iter",
    "tol_step", "tol_eps", "eps_floor", "seed", "x0",
}


def _required(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"field '{key}': missing")
    return cfg[key]


def _positive_real(value, key: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"field '{key}': expected a number, got {value!r}")
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"field '{key}': must be a finite positive real, got {value}")
    return value


def _load_matrix(value, key: str, base: Path) -> np.ndarray:
    if isinstance(value, str):
        return read_matrix_market(base / value)
    try:
        M = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}': expected a path or nested list") from None
    if M.ndim != 2:
        raise ConfigError(f"field '{key}': inline matrix must be 2-D")
    return M


def _load_vector(value, key: str, base: Path) -> np.ndarray:
    if isinstance(value, str):
        return read_vector(base / value)
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"field '{key}': expected a path or list") from None
    if v.ndim != 1:
        raise ConfigError(f"field '{key}': inline vector must be 1-D")
    return v


def _build_loss(spec, base: Path) -> SmoothLoss:
    if not isinstance(spec, dict):
        raise ConfigError("field 'loss': expected an object")
    kind = spec.get("kind")
    if kind not in _LOSS_KINDS:
        raise ConfigError(f"field 'loss.kind': expected one of {_LOSS_KINDS}, got {kind!r}")
    try:
        if kind == "least_squares":
            return LeastSquares(
                _load_matrix(_required(spec, "A"), "loss.A", base),
                _load_vector(_required(spec, "b"), "loss.b", base),
            )
        if kind == "logistic":
            return Logistic(
                _load_matrix(_required(spec, "A"), "loss.A", base),
                _load_vector(_required(spec, "y"), "loss.y", base),
                ridge=float(spec.get("ridge", 0.0)),
            )
        return Quadratic(
            _load_matrix(_required(spec, "Q"), "loss.Q", base),
            _load_vector(_required(spec, "c"), "loss.c", base),
        )
    except ValueError as exc:
        if isinstance(exc, (ConfigError, FileFormatError)):
            raise
        raise ConfigError(f"field 'loss': {exc}") from exc


def load_problem(config_path) -> tuple[LpProblem, SolverConfig, np.ndarray]:
    """Parse a JSON run config into (problem, solver config, start point).

    Matrices referenced by path are Matrix Market files, vectors are
    newline-delimited decimal literals; relative paths resolve against
    the config file's directory. Every numeric invariant is validated
    here with the offending field named.
    """
    config_path = Path(config_path)
    try:
        raw = json.loads(config_path.read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            f"{config_path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown field(s): {sorted(unknown)}")

    base = config_path.parent
    loss = _build_loss(_required(raw, "loss"), base)
    lam = _positive_real(_required(raw, "lambda"), "lambda")
    p = raw.get("p")
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0 < float(p) < 1:
        raise ConfigError(f"field 'p': must be a real in (0, 1), got {p!r}")
    try:
        problem = LpProblem(loss=loss, lam=lam, p=float(p))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    beta = raw.get("beta", "auto")
    if beta == "auto":
        beta = loss.L_f
    else:
        beta = _positive_real(beta, "beta")
    if beta <= loss.L_f / 2.0:
        raise ConfigError(
            f"field 'beta': must exceed L_f/2 = {loss.L_f / 2.0}, got {beta}"
        )

    kwargs = {"beta": beta}
    for key in ("mu", "tol_step", "tol_eps", "eps_floor"):
        if key in raw:
            if not isinstance(raw[key], (int, float)) or isinstance(raw[key], bool):
                raise ConfigError(f"field '{key}': expected a number, got {raw[key]!r}")
            kwargs[key] = float(raw[key])
    if "eps0" in raw:
        eps0 = raw["eps0"]
        kwargs["eps0"] = (
            np.asarray(eps0, dtype=float) if isinstance(eps0, list) else float(eps0)
        )
    if "max_iter" in raw:
        if not isinstance(raw["max_iter"], int) or isinstance(raw["max_iter"], bool):
            raise ConfigError(f"field 'max_iter': expected an integer, got {raw['max_iter']!r}")
        kwargs["max_iter"] = raw["max_iter"]
    if "seed" in raw and (not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool)):
        raise ConfigError(f"field 'seed': expected an integer, got {raw['seed']!r}")
    try:
        config = SolverConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    x0_spec = raw.get("x0", "zero")
    if x0_spec == "zero":
        x0 = np.zeros(problem.n)
    elif isinstance(x0_spec, str):
        x0 = read_vector(base / x0_spec)
    else:
        x0 = _load_vector(x0_spec, "x0", base)
    if x0.shape != (problem.n,):
        raise ConfigError(
            f"field 'x0': has dimension {x0.size}, expected {problem.n}"
        )
    return problem, config, x0


# ---------------------------------------------------------------------------
# Trace CSV

def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def sign_hash(sign) -> int:
    """FNV-1a over the sign vector encoded one byte per entry.

    The encoding is -1 -> 0x00, 0 -> 0x01, +1 -> 0x02.
    """
    return fnv1a_64(bytes(int(s) + 1 for s in sign))


@dataclass(frozen=True)
class TraceCsvRow:
    k: int
    F: float
    f: float
    step_norm: float
    residual: float
    support_size: int
    eps_max: float
    sign_hash: int


def write_trace(trace, path) -> None:
    """Write one CSV row per traced iteration under the fixed header."""
    if not trace:
        raise ValueError("cannot write an empty trace")
    lines = [TRACE_HEADER]
    for rec in trace:
        lines.append(
            ",".join(
                (
                    str(rec.k),
                    _fmt(rec.F_val),
                    _fmt(rec.f_val),
                    _fmt(rec.step_norm),
                    _fmt(rec.residual),
                    str(len(rec.support)),
                    _fmt(rec.eps.max()),
                    str(sign_hash(rec.sign)),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path) -> list[TraceCsvRow]:
    path = Path(path)
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != TRACE_HEADER:
        raise _parse_err(path, 1, 1, f"expected header {TRACE_HEADER!r}")
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln:
            continue
        toks = ln.split(",")
        if len(toks) != 8:
            raise _parse_err(path, lineno, 1, f"expected 8 columns, found {len(toks)}")
        try:
            rows.append(
                TraceCsvRow(
                    k=int(toks[0]),
                    F=float(toks[1]),
                    f=float(toks[2]),
                    step_norm=float(toks[3]),
                    residual=float(toks[4]),
                    support_size=int(toks[5]),
                    eps_max=float(toks[6]),
                    sign_hash=int(toks[7]),
                )
            )
        except ValueError as exc:
            raise _parse_err(path, lineno, 1, str(exc)) from None
    if not rows:
        raise _parse_err(path, 1, 1, "trace file has no data rows")
    return rows


def read_errors_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a `k,e` error-sequence CSV for standalone rate estimation."""
    path = Path(path)
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    if not lines or lines[0] != "k,e":
        raise _parse_err(path, 1, 1, "expected header 'k,e'")
    ks, es = [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        if not ln:
            continue
        toks = ln.split(",")
        if len(toks) != 2:
            raise _parse_err(path, lineno, 1, f"expected 2 columns, found {len(toks)}")
        try:
            ks.append(float(toks[0]))
            es.append(float(toks[1]))
        except ValueError:
            raise _parse_err(path, lineno, 1, f"invalid row {ln!r}") from None
    if not ks:
        raise _parse_err(path, 1, 1, "error file has no data rows")
    return np.array(ks), np.array(es)


# ---------------------------------------------------------------------------
# Synthetic sparse least-squares instances

def make_instance(m: int, n: int, sparsity: int, noise: float, seed: int):
    """Standard-normal design, k-sparse +-1 signal, Gaussian noise.

    Returns (A, b, x_true) with b = A x_true + noise * standard normal.
    """
    if not (1 <= sparsity <= n):
        raise ValueError(f"sparsity must lie in [1, {n}], got {sparsity}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    support = rng.choice(n, size=sparsity, replace=False)
    x_true[support] = rng.integers(0, 2, size=sparsity) * 2.0 - 1.0
    b = A @ x_true + noise * rng.standard_normal(m)
    return A, b, x_true


def generate_instance(
    m: int,
    n: int,
    sparsity: int,
    noise: float,
    seed: int,
    out_dir,
    lam: float = 0.1,
    p: float = 0.5,
) -> dict:
    """Write a synthetic instance plus a ready-to-run config into out_dir.

    Produces A.mtx (Matrix Market), b.txt and x_true.txt (plain vectors)
    and config.json referencing them; identical arguments always produce
    byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    A, b, x_true = make_instance(m, n, sparsity, noise, seed)
    paths = {
        "A": out / "A.mtx",
        "b": out / "b.txt",
        "x_true": out / "x_true.txt",
        "config": out / "config.json",
    }
    write_matrix_market(paths["A"], A)
    write_vector(paths["b"], b)
    write_vector(paths["x_true"], x_true)
    cfg = {
        "loss": {"kind": "least_squares", "A": "A.mtx", "b": "b.txt"},
        "lambda": lam,
        "p": p,
        "beta": "auto",
        "seed": seed,
        "x0": "zero",
    }
    paths["config"].write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return {k: str(v) for k, v in paths.items()}
