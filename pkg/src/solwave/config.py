"""Experiment configuration: one JSON file drives every CLI subcommand.

See docs/config-schema.json for the published schema.  A configuration
fixes the scaling parameters, profile, potential, grid, initial state,
stepping, horizon and seed; the scan list reuses the same configuration at
several values of the semiclassical parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .grid import GridSpec
from .io import read_json
from .params import ScalingParams, validate_params
from .potentials import Potential, potential_from_config
from .profile import NonlinearitySpec, ProfileSpec


@dataclass
class ExperimentConfig:
    params: ScalingParams
    profile: ProfileSpec
    nonlinearity: NonlinearitySpec
    potential: Potential
    grid_n: int
    grid_L: float | None  # None: size the box per epsilon from the margin rule
    box_margin: float
    a0: np.ndarray
    xi0: np.ndarray
    theta0: float
    dt: float
    T: float | None  # explicit horizon, or None to use the rule below
    horizon_c: float  # T = c * eps^(eta - delta)
    epsilon_list: list[float] = field(default_factory=list)
    snapshot_every: int = 10
    check_every: int = 4  # in snapshots
    seed: int = 0
    save_fields: bool = False
    frame_convention: str = "as_printed"
    n_quad: int = 64
    out_dir: str = "runs"

    def horizon(self, eps: float | None = None) -> float:
        if self.T is not None:
            return self.T
        p = self.params if eps is None else self.params.with_eps(eps)
        if p.eta is None:
            raise InputError("horizon rule needs eta in the scaling parameters")
        return self.horizon_c * p.eps ** (p.eta - p.delta)

    def box_half_width(self, eps: float | None = None) -> float:
        if self.grid_L is not None:
            return self.grid_L
        p = self.params if eps is None else self.params.with_eps(eps)
        return float(np.max(np.abs(self.a0))) + p.eps_beta * self.profile.r_max + self.box_margin

    def grid(self, eps: float | None = None) -> GridSpec:
        return GridSpec(N=self.params.N, n=self.grid_n, L=self.box_half_width(eps))

    def to_dict(self) -> dict:
        return {
            "params": {
                "N": self.params.N,
                "p": self.params.p,
                "alpha": self.params.alpha,
                "beta": self.params.beta,
                "gamma": self.params.gamma,
                "eps": self.params.eps,
                "eta": self.params.eta,
            },
            "profile": {
                "rho": self.profile.rho,
                "r_max": self.profile.r_max,
                "n_r": self.profile.n_r,
                "tol_residual": self.profile.tol_residual,
                "max_iter": self.profile.max_iter,
            },
            "potential": self.potential.to_config(),
            "grid": {"n": self.grid_n, "L": self.grid_L, "margin": self.box_margin},
            "initial_state": {
                "a": list(map(float, self.a0)),
                "xi": list(map(float, self.xi0)),
                "theta": self.theta0,
            },
            "dt": self.dt,
            "T": self.T,
            "horizon_c": self.horizon_c,
            "epsilon_list": list(self.epsilon_list),
            "snapshot_every": self.snapshot_every,
            "check_every": self.check_every,
            "seed": self.seed,
            "save_fields": self.save_fields,
            "frame_convention": self.frame_convention,
            "n_quad": self.n_quad,
        }


def config_from_dict(cfg: dict) -> ExperimentConfig:
    try:
        pd = cfg["params"]
        params = ScalingParams(
            N=int(pd["N"]),
            p=float(pd["p"]),
            alpha=float(pd["alpha"]),
            beta=float(pd["beta"]),
            gamma=float(pd["gamma"]),
            eps=float(pd["eps"]),
            eta=None if pd.get("eta") is None else float(pd["eta"]),
        )
        prd = cfg["profile"]
        profile = ProfileSpec(
            N=params.N,
            rho=float(prd["rho"]),
            r_max=float(prd["r_max"]),
            n_r=int(prd["n_r"]),
            tol_residual=float(prd.get("tol_residual", 1e-10)),
            max_iter=int(prd.get("max_iter", 500)),
        )
        nl = NonlinearitySpec(p=params.p)
        pot = potential_from_config(cfg["potential"])
        gd = cfg["grid"]
        st = cfg["initial_state"]
        a0 = np.asarray(st["a"], dtype=float)
        xi0 = np.asarray(st["xi"], dtype=float)
        if len(a0) != params.N or len(xi0) != params.N:
            raise InputError("initial state dimension does not match N")
        return ExperimentConfig(
            params=params,
            profile=profile,
            nonlinearity=nl,
            potential=pot,
            grid_n=int(gd["n"]),
            grid_L=None if gd.get("L") is None else float(gd["L"]),
            box_margin=float(gd.get("margin", 0.5)),
            a0=a0,
            xi0=xi0,
            theta0=float(st.get("theta", 0.0)),
            dt=float(cfg["dt"]),
            T=None if cfg.get("T") is None else float(cfg["T"]),
            horizon_c=float(cfg.get("horizon_c", 1.0)),
            epsilon_list=[float(e) for e in cfg.get("epsilon_list", [])],
            snapshot_every=int(cfg.get("snapshot_every", 10)),
            check_every=int(cfg.get("check_every", 4)),
            seed=int(cfg.get("seed", 0)),
            save_fields=bool(cfg.get("save_fields", False)),
            frame_convention=str(cfg.get("frame_convention", "as_printed")),
            n_quad=int(cfg.get("n_quad", 64)),
        )
    except KeyError as exc:
        raise InputError(f"configuration missing required key: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed configuration: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    return config_from_dict(read_json(path))


def preflight(cfg: ExperimentConfig) -> list[str]:
    """Config-level validation shared by the CLI subcommands.

    Every epsilon in scope must pass the parameter checks, the horizon must
    be computable, and the box rule must produce a sane grid.
    """
    problems = []
    eps_values = cfg.epsilon_list if cfg.epsilon_list else [cfg.params.eps]
    for eps in eps_values:
        rep = validate_params(cfg.params.with_eps(eps))
        if not rep.admissible:
            problems.extend(f"eps={eps}: {m}" for m in rep.messages)
        try:
            T = cfg.horizon(eps)
            if not (T > 0 and math.isfinite(T)):
                problems.append(f"eps={eps}: horizon {T} not a positive finite time")
        except InputError as exc:
            problems.append(str(exc))
        L = cfg.box_half_width(eps)
        radius = cfg.params.with_eps(eps).eps_beta * cfg.profile.r_max
        if float(np.max(np.abs(cfg.a0))) + radius > L:
            problems.append(f"eps={eps}: initial wave does not fit the box (L={L})")
    if cfg.frame_convention not in ("as_printed", "direct_derivative"):
        problems.append(f"unknown frame convention {cfg.frame_convention!r}")
    return problems
