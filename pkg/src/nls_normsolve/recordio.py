"""File formats: flat config, JSON records, CSV curves, binary profiles.

Everything numeric is written with 17 significant digits so that a reload
reproduces the exact double.  The formats are documented in FORMATS.md.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .functional import Classification, SolutionRecord, StatePair, make_record
from .params import GeometryConstants, GNData, Params, Regime
from .radial import Profile, RadialGrid

_MAGIC = b"NLSPROF1"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# 17-significant-digit JSON
# ---------------------------------------------------------------------------

def _render(obj) -> str:
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist())
    if isinstance(obj, Regime):
        return json.dumps(obj.value)
    if isinstance(obj, Classification):
        return json.dumps(obj.value)
    return json.dumps(obj)


def dumps(obj) -> str:
    return _render(obj)


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# flat key = value configs
# ---------------------------------------------------------------------------

PARAM_KEYS = ("N", "p1", "p2", "r1", "r2", "mu1", "mu2", "beta", "a1", "a2")
RUN_KEYS = ("grid_n", "r_max", "tol", "seed", "out")


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key or not val:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def load_params(path: Path, overrides: dict | None = None) -> tuple[Params, dict]:
    """Params plus the leftover run settings from a flat config file."""
    raw = parse_config_text(Path(path).read_text())
    raw.update(overrides or {})
    missing = [k for k in PARAM_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    try:
        params = Params(
            N=int(raw["N"]),
            p1=float(raw["p1"]),
            p2=float(raw["p2"]),
            r1=float(raw["r1"]),
            r2=float(raw["r2"]),
            mu1=float(raw["mu1"]),
            mu2=float(raw["mu2"]),
            beta=float(raw["beta"]),
            a1=float(raw["a1"]),
            a2=float(raw["a2"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    extra = {k: v for k, v in raw.items() if k not in PARAM_KEYS}
    return params, extra


# ---------------------------------------------------------------------------
# profiles: CSV and binary
# ---------------------------------------------------------------------------

def write_profile_csv(path: Path, prof: Profile) -> None:
    lines = ["r,value"]
    for r, v in zip(prof.grid.r, prof.values):
        lines.append(f"{r:.17g},{v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_profile(path: Path, prof: Profile) -> None:
    header = dumps({"N": prof.grid.N, "r_max": prof.grid.r_max, "n": prof.grid.n}).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.asarray(prof.values, dtype="<f8").tobytes())


def read_profile(path: Path) -> Profile:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ConfigError(f"{path}: not a profile file")
    (hlen,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12 : 12 + hlen].decode())
    grid = RadialGrid(int(header["N"]), float(header["r_max"]), int(header["n"]))
    values = np.frombuffer(data[12 + hlen :], dtype="<f8").copy()
    if len(values) != grid.n:
        raise ConfigError(f"{path}: payload length {len(values)} != n {grid.n}")
    return Profile(grid, values)


# ---------------------------------------------------------------------------
# records and constants
# ---------------------------------------------------------------------------

def params_dict(p: Params) -> dict:
    return {k: getattr(p, k) for k in PARAM_KEYS}


def constants_dict(c: GeometryConstants, flag_q_choice: bool = True) -> dict:
    out = {
        "rho0": c.rho0,
        "beta0": c.beta0,
        "K1": c.K1,
        "K2": c.K2,
        "K3": c.K3,
        "q": c.holder_q,
        "regime": c.regime,
        "gn": {
            "alpha_p1": c.gn_alpha_p1,
            "alpha_p2": c.gn_alpha_p2,
            "C_p1": c.gn_C_p1,
            "C_p2": c.gn_C_p2,
            "C_cross": c.gn_C_cross,
        },
    }
    if flag_q_choice:
        out["metadata"] = {
            "holder_q_choice": "q = (r1+r2)/r1 so both mixed norms are the L^{r1+r2} norm; "
            "beta0 depends on this admissible choice",
            "power_law_gradient_at_zero": "|u|^{r-2} u extended by 0 at u = 0 for 1 < r < 2",
        }
    return out


def save_record(record: SolutionRecord, out_dir: Path, basename: str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    p1 = f"{basename}_u1.prof"
    p2 = f"{basename}_u2.prof"
    write_profile(out_dir / p1, record.state.u1)
    write_profile(out_dir / p2, record.state.u2)
    doc = {
        "lambda1": record.lambda1,
        "lambda2": record.lambda2,
        "energy": record.energy,
        "Q_residual": record.pohozaev_residual,
        "grad_residual": record.grad_residual,
        "classification": record.classification,
        "params": params_dict(record.params_snapshot),
        "profiles": {"u1": p1, "u2": p2},
        "diagnostics": _jsonable(record.diagnostics),
    }
    if record.constants_snapshot is not None:
        doc["constants"] = constants_dict(record.constants_snapshot, flag_q_choice=False)
    path = out_dir / f"{basename}.json"
    write_json(path, doc)
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def load_record(path: Path, revalidate: bool = True, tol: float = 1e-10) -> SolutionRecord:
    path = Path(path)
    doc = json.loads(path.read_text())
    params = Params(**{k: (int(v) if k == "N" else float(v)) for k, v in doc["params"].items()})
    u1 = read_profile(path.parent / doc["profiles"]["u1"])
    u2 = read_profile(path.parent / doc["profiles"]["u2"])
    state = StatePair(u1, u2)
    record = make_record(state, params, Classification(doc["classification"]))
    if revalidate:
        for key, stored, fresh in (
            ("lambda1", doc["lambda1"], record.lambda1),
            ("lambda2", doc["lambda2"], record.lambda2),
            ("energy", doc["energy"], record.energy),
            ("Q_residual", doc["Q_residual"], record.pohozaev_residual),
            ("grad_residual", doc["grad_residual"], record.grad_residual),
        ):
            if abs(stored - fresh) > tol * max(1.0, abs(stored)):
                raise ConfigError(
                    f"{path}: stored {key}={stored!r} does not revalidate (recomputed {fresh!r})"
                )
    record.diagnostics = doc.get("diagnostics", {})
    return record


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format(float(x), ".17g") for x in row))
    Path(path).write_text("\n".join(lines) + "\n")
