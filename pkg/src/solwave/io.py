"""File formats: CSV tables, JSON sidecars, raw field snapshots.

All CSV floats are written with 17 significant digits so float64 values
round-trip exactly; JSON numbers use the shortest exact representation.
Field snapshots are raw little-endian float64 (re, im) pairs in row-major
order next to a JSON header.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import InputError
from .grid import ComplexField, GridSpec
from .profile import Profile

FLOAT_FMT = "%.17g"


def fmt(x: float) -> str:
    return FLOAT_FMT % float(x)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) if not isinstance(x, str) else x for x in row) + "\n")


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def _plain(obj):
    """Recursively convert numpy scalars/arrays to plain Python types."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


# -- profile ---------------------------------------------------------------


def save_profile(prof: Profile, base_path: str) -> None:
    """Write <base>.csv with r,U rows and <base>.json with the metadata."""
    write_csv(base_path + ".csv", ["r", "U"], zip(prof.r, prof.u))
    write_json(
        base_path + ".json",
        {
            "omega": prof.omega,
            "rho": prof.rho,
            "p": prof.p,
            "N": prof.N,
            "M1": prof.m1,
            "M2": prof.m2,
            "M3": prof.m3,
            "sup_norm": prof.sup_norm,
        },
    )


def load_profile(base_path: str) -> Profile:
    header, data = read_csv(base_path + ".csv")
    if header != ["r", "U"]:
        raise InputError(f"unexpected profile CSV header {header}")
    meta = read_json(base_path + ".json")
    return Profile(
        N=int(meta["N"]),
        p=float(meta["p"]),
        r=data[:, 0],
        u=data[:, 1],
        omega=float(meta["omega"]),
        rho=float(meta["rho"]),
        m1=float(meta["M1"]),
        m2=float(meta["M2"]),
        m3=float(meta["M3"]),
        sup_norm=float(meta["sup_norm"]),
    )


# -- fields ----------------------------------------------------------------


def save_field(f: ComplexField, base_path: str, t: float, params_dict: dict | None = None) -> None:
    """Raw little-endian complex128 payload plus a JSON header."""
    with open(base_path + ".bin", "wb") as fh:
        fh.write(np.ascontiguousarray(f.data, dtype="<c16").tobytes())
    write_json(
        base_path + ".json",
        {"grid": f.grid.to_config(), "t": t, "params": params_dict or {}},
    )


def load_field(base_path: str) -> tuple[ComplexField, float, dict]:
    meta = read_json(base_path + ".json")
    g = meta["grid"]
    grid = GridSpec(N=int(g["N"]), n=int(g["n"]), L=float(g["L"]))
    raw = np.fromfile(base_path + ".bin", dtype="<c16")
    if raw.size != grid.n**grid.N:
        raise InputError(
            f"field payload has {raw.size} samples, grid wants {grid.n ** grid.N}"
        )
    data = raw.reshape(grid.shape).astype(np.complex128)
    return ComplexField(grid, data), float(meta["t"]), meta.get("params", {})


# -- tables used by the pipeline -------------------------------------------


def trajectory_header(N: int) -> list[str]:
    return (
        ["t"]
        + [f"a_{j + 1}" for j in range(N)]
        + [f"xi_{j + 1}" for j in range(N)]
        + ["theta", "omega_eps", "vartheta", "H_M", "abar_running"]
    )


def monitors_header() -> list[str]:
    return ["t", "charge", "hamiltonian", "spectral_tail"]


def pairing_header(N: int) -> list[str]:
    return (
        ["t"]
        + [f"omega_w_z{j + 1}" for j in range(2 * N + 1)]
        + ["w_l2", "wtilde_l2"]
    )


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
