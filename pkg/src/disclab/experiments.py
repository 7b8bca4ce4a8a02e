"""Experiment catalog E1-E9: configuration, execution, reports.

Each experiment measures a set of named values, compares them against
expected values carrying a provenance tag, and records per-criterion
pass/fail.  Reports serialize to byte-stable JSON and CSV.
"""

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import alexander as alx
from . import calabi as cb
from . import graphical as gr
from . import phase as ph
from .chart import jmap
from .fields import SeparableBump, loop_bump, moving_bump, radial_bump, twist_bump
from .flows import flow_map, hamiltonian_path, integrate_points, PlaneMap
from .grids import DiscDomain, square_grid

EXPERIMENT_IDS = tuple(f"E{i}" for i in range(1, 10))
FAMILY_NAMES = ("radial_bump", "reparam_loop", "moving_bump", "twist")

_CONFIG_FIELDS = {
    "experiment_id": str,
    "grid_n": int,
    "dt": float,
    "h_a": float,
    "family": str,
    "amp": float,
    "rho": float,
    "m": int,
    "angle": float,
    "sweep": float,
    "seed": int,
    "output_path": str,
}


@dataclass
class ExperimentConfig:
    experiment_id: str = "E1"
    grid_n: int = 256
    dt: float = 1e-3
    h_a: float = 0.125
    family: str = "radial_bump"
    amp: float = 0.05
    rho: float = 0.8
    m: int = 4
    angle: float = 0.8
    sweep: float = 0.3
    seed: int = 2024
    output_path: str = ""
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ValueError(
                f"unknown experiment id {self.experiment_id!r}; "
                f"choose one of {', '.join(EXPERIMENT_IDS)}"
            )
        n = self.grid_n
        if n < 64 or (n & (n - 1)) != 0:
            raise ValueError(f"grid_n must be a power of two >= 64, got {n}")
        if not 0.0 < self.dt <= 1e-2:
            raise ValueError(f"dt must lie in (0, 1e-2], got {self.dt}")
        if self.h_a <= 0.0:
            raise ValueError(f"h_a must be positive, got {self.h_a}")
        if self.family not in FAMILY_NAMES:
            raise ValueError(
                f"unknown family {self.family!r}; choose one of "
                f"{', '.join(FAMILY_NAMES)}"
            )
        for key, val in self.tolerances.items():
            if val <= 0.0:
                raise ValueError(f"tolerance {key} must be positive, got {val}")

    @property
    def nodes(self):
        """Node count: grid_n cells per side, so the origin is a node."""
        return self.grid_n + 1

    def grid(self, extent=1.05):
        return square_grid(self.nodes, extent=extent)

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))


def parse_config(path, **overrides):
    """Plain key = value lines (UTF-8); unknown keys are errors."""
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, val = stripped.partition("=")
            key = key.strip()
            val = val.strip()
            if key in _CONFIG_FIELDS:
                raw[key] = _CONFIG_FIELDS[key](val)
            elif key.startswith("tol_"):
                raw.setdefault("tolerances", {})[key[4:]] = float(val)
            else:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**raw)


def make_family(name, cfg):
    """Instantiate one of the built-in Hamiltonian families from a config."""
    if name == "radial_bump":
        return radial_bump(amp=cfg.amp, rho=cfg.rho, m=cfg.m)
    if name == "reparam_loop":
        return loop_bump(amp=cfg.amp, rho=cfg.rho, m=cfg.m)
    if name == "moving_bump":
        return moving_bump(amp=cfg.amp, rho=0.25, m=cfg.m, sweep=cfg.sweep)
    if name == "twist":
        return twist_bump(angle=cfg.angle, rho=cfg.rho, m=cfg.m)
    raise ValueError(f"unknown family {name!r}")


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    experiment_id: str
    config: dict
    measured: dict
    expected: dict          # name -> {"value": float, "provenance": tag}
    passed: dict            # criterion name -> bool
    errors: dict            # criterion name -> message
    runtime: float

    @property
    def overall_pass(self):
        return bool(self.passed) and all(self.passed.values()) and not self.errors


def _fmt(x):
    if isinstance(x, float):
        return "%.12e" % x
    return x


def _canonical(obj):
    if isinstance(obj, dict):
        return {k: _canonical(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return _fmt(obj)


def report_to_json(report):
    payload = {
        "experiment_id": report.experiment_id,
        "config": _canonical(report.config),
        "measured": _canonical(report.measured),
        "expected": _canonical(report.expected),
        "passed": {k: bool(v) for k, v in sorted(report.passed.items())},
        "errors": {k: str(v) for k, v in sorted(report.errors.items())},
        # runtime is reported on stdout only: emitted files must be
        # byte-identical across runs of the same config and seed
        "overall_pass": report.overall_pass,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def report_to_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "name", "value", "provenance", "passed"])
    for name in sorted(report.measured):
        writer.writerow(["measured", name, _fmt(report.measured[name]), "", ""])
    for name in sorted(report.expected):
        entry = report.expected[name]
        writer.writerow(
            ["expected", name, _fmt(entry["value"]), entry["provenance"], ""]
        )
    for name in sorted(report.passed):
        writer.writerow(["criterion", name, "", "", str(report.passed[name])])
    for name in sorted(report.errors):
        writer.writerow(["error", name, report.errors[name], "", "False"])
    return buf.getvalue()


def emit_report(report, fmt, path):
    text = report_to_json(report) if fmt == "json" else report_to_csv(report)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# experiment bodies


VOL = DiscDomain().sphere_volume


def run_experiment(cfg):
    runner = _RUNNERS[cfg.experiment_id]
    measured, expected, passed, errors = {}, {}, {}, {}
    start = time.time()
    try:
        runner(cfg, measured, expected, passed)
    except Exception as exc:  # record, never crash the report
        errors["completed"] = f"{type(exc).__name__}: {exc}"
        passed["completed"] = False
    runtime = time.time() - start
    return ExperimentReport(
        cfg.experiment_id, _config_echo(cfg), measured, expected, passed,
        errors, runtime,
    )


def _config_echo(cfg):
    echo = asdict(cfg)
    echo["tolerances"] = dict(cfg.tolerances)
    return echo


def _closed_form_cal(F):
    """Time-1 Calabi of a separable bump: amp * pi * rho^2 / (m + 1) * int tau."""
    base = F.amp * math.pi * F.rho**2 / (F.m + 1)
    if F.tau is None:
        return base
    ts = np.linspace(0.0, 1.0, 2001)
    return base * float(np.trapezoid([F.tau(t) for t in ts], ts))


def _e1(cfg, measured, expected, passed):
    """Calabi by primitive vs Calabi by double quadrature, three families."""
    tol = cfg.tol("agreement", 5e-3)
    grid = cfg.grid()
    for name in ("radial_bump", "reparam_loop", "moving_bump"):
        F = make_family(name, cfg)
        cal_p = cb.cal_path(F, grid)
        phi = flow_map(F, 1.0, grid=grid, dt=cfg.dt)
        rep = cb.primitive_and_cal_def1(phi, cal_path_value=cal_p)
        measured[f"{name}_cal_def1"] = rep.cal_def1
        measured[f"{name}_cal_path"] = cal_p
        measured[f"{name}_agreement_error"] = rep.agreement_error
        measured[f"{name}_primitive_residual"] = rep.primitive_residual
        if name == "reparam_loop":
            expected[f"{name}_cal_path"] = {
                "value": 0.0, "provenance": "[TRIVIAL]",
            }
        else:
            expected[f"{name}_cal_path"] = {
                "value": _closed_form_cal(F), "provenance": "[DERIVED]",
            }
        expected[f"{name}_agreement_error"] = {
            "value": 0.0, "provenance": "[PAPER]",
        }
        passed[f"{name}_agreement"] = rep.agreement_error <= tol * (1 + abs(cal_p))
        passed[f"{name}_oracle"] = (
            abs(cal_p - expected[f"{name}_cal_path"]["value"])
            <= tol * (1 + abs(cal_p))
        )


def _e2(cfg, measured, expected, passed):
    """Calabi scales like the fourth power of the rescaling parameter."""
    tol = cfg.tol("ratio_rel", 1e-6)
    H = make_family(cfg.family, cfg)
    if not isinstance(H, SeparableBump):
        raise ValueError("E2 needs a separable-bump family")
    base_grid = cfg.grid()
    base = cb.cal_path(H, base_grid)
    measured["cal_base"] = base
    for a in (0.5, 0.25, 0.75):
        K = alx.rescale(H, a).hamiltonian
        grid_a = square_grid(cfg.nodes, extent=1.05 * a)
        cal_a = alx._cal_on(K, grid_a, 129)
        ratio = cal_a / base
        measured[f"ratio_a_{a}"] = ratio
        expected[f"ratio_a_{a}"] = {"value": a**4, "provenance": "[PAPER]"}
        passed[f"ratio_a_{a}"] = abs(ratio - a**4) <= tol * a**4


def _e3(cfg, measured, expected, passed):
    """Shrinking supports: constant Calabi, vanishing C0 size, Hofer blow-up."""
    tol_cal = cfg.tol("cal_rel", 1e-6)
    tol_ratio = cfg.tol("hofer_ratio", 1e-6)
    H = make_family(cfg.family, cfg)
    scales = [2.0 ** -i for i in range(1, 6)]
    diags = alx.shrinking_calabi_sequence(H, scales, node_count=cfg.nodes)
    base_cal = cb.cal_path(H)
    cal_ok, c0_ok = True, True
    for d in diags:
        measured[f"cal_a_{d.scale}"] = d.cal
        measured[f"c0_a_{d.scale}"] = d.c0_dist
        measured[f"hofer_a_{d.scale}"] = d.hofer_len
        cal_ok &= abs(d.cal - base_cal) <= tol_cal * abs(base_cal)
        c0_ok &= d.c0_dist <= 2.0 * d.scale
    ratios = [
        diags[i].hofer_len / diags[i - 1].hofer_len for i in range(1, len(diags))
    ]
    for i, r in enumerate(ratios):
        measured[f"hofer_ratio_{i}"] = r
    expected["cal_constant"] = {"value": base_cal, "provenance": "[PAPER]"}
    expected["hofer_ratio"] = {"value": 4.0, "provenance": "[DERIVED]"}
    passed["cal_constant"] = cal_ok
    passed["c0_bound"] = c0_ok
    passed["hofer_ratio"] = all(abs(r - 4.0) <= tol_ratio * 4.0 for r in ratios)
    if cfg.output_path:
        alx.sequence_to_csv(diags, cfg.output_path)


def _e4(cfg, measured, expected, passed):
    """Identity-region value of the phase function is Cal / vol(sphere)."""
    tol = cfg.tol("identity_value", 2e-3)
    tol_graph = cfg.tol("graph_consistency", 2e-3)
    grid = cfg.grid()
    for name in ("radial_bump", "moving_bump", "twist"):
        F = make_family(name, cfg)
        f, value, _ = ph.phase_function_graphical(F, grid=grid, dt=cfg.dt)
        cal = cb.cal_path(F, grid)
        measured[f"{name}_identity_value"] = value
        measured[f"{name}_cal_over_vol"] = cal / VOL
        expected[f"{name}_identity_value"] = {
            "value": cal / VOL, "provenance": "[PAPER]",
        }
        passed[f"{name}_identity_value"] = abs(value - cal / VOL) <= tol
        gs = ph.basic_generating(F, grid=square_grid(129), dt=cfg.dt)
        gap = float(np.max(np.abs(f(gs.q) - gs.h)))
        measured[f"{name}_graph_consistency"] = gap
        expected[f"{name}_graph_consistency"] = {
            "value": 0.0, "provenance": "[DERIVED]",
        }
        passed[f"{name}_graph_consistency"] = gap <= tol_graph


def _e5(cfg, measured, expected, passed):
    """Time-1 phase functions of loops are constant, equal to Cal / vol = 0."""
    tol_spread = cfg.tol("spread", 5e-3)
    tol_value = cfg.tol("value", 5e-3)
    grid = cfg.grid()
    for label, factor in (("loop", 1.0), ("loop_strong", 2.0)):
        L = loop_bump(amp=cfg.amp * factor, rho=cfg.rho, m=cfg.m)
        f, value, _ = ph.phase_function_graphical(L, grid=grid, dt=cfg.dt)
        spread = float(np.ptp(f.values))
        measured[f"{label}_spread"] = spread
        measured[f"{label}_value"] = value
        expected[f"{label}_value"] = {"value": 0.0, "provenance": "[PAPER]"}
        passed[f"{label}_spread"] = spread <= tol_spread
        passed[f"{label}_value"] = abs(value) <= tol_value


def _e6(cfg, measured, expected, passed):
    """Star-shape determinant positivity over random symmetric matrices."""
    tol = cfg.tol("expansion", 1e-14)
    rng = np.random.default_rng(cfg.seed)
    n_samples = 10_000
    samples = np.empty((0, 3))
    while samples.shape[0] < n_samples:
        batch = rng.normal(size=(2 * n_samples, 3))
        keep = 1.0 + (batch[:, 0] * batch[:, 1] - batch[:, 2] ** 2) > 0.0
        samples = np.vstack([samples, batch[keep]])
    samples = samples[:n_samples]
    r = np.linspace(0.0, 1.0, 101)
    disc = samples[:, 0] * samples[:, 1] - samples[:, 2] ** 2
    closed = 1.0 + r[None, :] ** 2 * disc[:, None]
    # direct 2x2 expansion of det(I - r jA)
    a, b, c = samples.T
    m11 = 1.0 + r[None, :] * c[:, None]
    m12 = r[None, :] * b[:, None]
    m21 = -r[None, :] * a[:, None]
    m22 = 1.0 - r[None, :] * c[:, None]
    direct = m11 * m22 - m12 * m21
    failures = int(np.sum(np.min(direct, axis=1) <= 0.0))
    mismatch = float(np.max(np.abs(direct - closed)))
    measured["failures"] = float(failures)
    measured["samples"] = float(n_samples)
    measured["expansion_mismatch"] = mismatch
    expected["failures"] = {"value": 0.0, "provenance": "[DERIVED]"}
    expected["expansion_mismatch"] = {"value": 0.0, "provenance": "[PAPER]"}
    passed["positivity"] = failures == 0
    passed["expansion"] = mismatch <= tol


def _e7(cfg, measured, expected, passed):
    """Calabi and generating functions agree between the s-path and the t-path."""
    tol_cal = cfg.tol("cal", 1e-3)
    tol_sup = cfg.tol("sup", 5e-3)
    H = make_family(cfg.family, cfg)
    fam = alx.linear_family(H)
    sham = alx.s_hamiltonian(
        fam, s_samples=np.linspace(0.0625, 1.0, 16), nt=17,
        grid=square_grid(129), dt=max(cfg.dt, 2e-3),
    )
    cal_k, cal_h = alx.calabi_match(sham, fam)
    measured["cal_k1"] = cal_k
    measured["cal_h1"] = cal_h
    expected["cal_k1"] = {"value": cal_h, "provenance": "[PAPER]"}
    passed["calabi_match"] = abs(cal_k - cal_h) <= tol_cal
    # generating function of the s-path vs the t-path
    grid = cfg.grid()
    f_h, _, _ = ph.phase_function_graphical(H, grid=grid, dt=cfg.dt)
    K1 = sham.time_one_field()
    qx, qy = grid.nodes()
    nodes = np.stack([qx.ravel(), qy.ravel()], axis=-1)
    img = integrate_points(K1, 0.0, 1.0, nodes, dt=max(cfg.dt, 2e-3))
    phi_k = PlaneMap(
        grid.with_values(img[:, 0].reshape(qx.shape)),
        grid.with_values(img[:, 1].reshape(qx.shape)),
        H.support_radius,
    )
    alpha_k = gr.recover_one_form(phi_k)
    f_k = gr.integrate_generating(alpha_k, base_value=cal_k / VOL)
    gap = float(np.max(np.abs(f_k.values - f_h.values)))
    measured["generating_sup_diff"] = gap
    expected["generating_sup_diff"] = {"value": 0.0, "provenance": "[PAPER]"}
    passed["generating_match"] = gap <= tol_sup


def _e8(cfg, measured, expected, passed):
    """Hamilton-Jacobi residual convergence plus the rescaled-potential laws."""
    ratio_min = cfg.tol("hj_ratio_min", 1.7)
    tol_scaling = cfg.tol("scaling", 5e-5)
    H = make_family(cfg.family, cfg)
    fam = alx.alexander_family(H)

    def hj_level(n_nodes, n_samples, dt):
        grid = square_grid(n_nodes)
        a_samples = np.linspace(0.5, 1.0, n_samples)
        sham = alx.s_hamiltonian(fam, s_samples=a_samples, nt=17, grid=grid, dt=dt)
        fields, values = [], []
        for a in a_samples:
            f, v, _ = ph.phase_function_graphical(fam.at(a), grid=grid, dt=dt)
            fields.append(f)
            values.append(v)
        pfam = ph.PhaseFamily(list(a_samples), fields, values)
        offsets = {}

        def G(a, q, p):
            key = round(float(a), 12)
            if key not in offsets:
                pts = np.stack(grid.nodes(), axis=-1)
                offsets[key] = (
                    float(np.sum(sham(a, 1.0, pts))) * grid.spacing**2 / VOL
                )
            return sham(a, 1.0, q + 0.5 * jmap(p)) - offsets[key]

        return ph.hj_residual(pfam, G).residual

    coarse = hj_level(cfg.nodes // 2 + 1, 5, max(cfg.dt, 2e-3))
    fine = hj_level(cfg.nodes, 9, cfg.dt)
    measured["hj_residual_coarse"] = coarse
    measured["hj_residual_fine"] = fine
    measured["hj_ratio"] = coarse / fine
    expected["hj_ratio"] = {"value": 2.0, "provenance": "[PAPER]"}
    passed["hj_convergence"] = coarse / fine >= ratio_min

    phi = flow_map(H, 1.0, grid=cfg.grid(), dt=cfg.dt)
    chain = gr.trace_chain_family(phi, [0.75, 0.5, 0.25, 0.125, 0.0625])
    defect = chain.scaling_defect()
    measured["scaling_defect"] = defect
    expected["scaling_defect"] = {"value": 0.0, "provenance": "[PAPER]"}
    passed["potential_scaling"] = defect <= tol_scaling

    h_a = cfg.h_a
    rng = np.random.default_rng(cfg.seed)
    probes = rng.uniform(-0.25, 0.25, size=(64, 2))
    chain_fd = gr.trace_chain_family(
        phi,
        [0.5 - h_a, 0.5, 0.5 + h_a, 0.5 - h_a / 2, 0.5 + h_a / 2],
    )
    d_full = gr.trace_chain_dgada(chain_fd, 0.5, h_a, probes)
    d_half = gr.trace_chain_dgada(chain_fd, 0.5, h_a / 2, probes)
    measured["dgada_defect_h"] = d_full
    measured["dgada_defect_h_half"] = d_half
    expected["dgada_defect_h"] = {"value": 0.0, "provenance": "[PAPER]"}
    passed["dgada_first_order"] = d_half <= max(0.75 * d_full, 1e-8)


def _e9(cfg, measured, expected, passed):
    """The phase integral of a graphical loop family vanishes."""
    tol_int = cfg.tol("integral", 1e-2)
    tol_sup = cfg.tol("sup", 1e-2)
    L = loop_bump(amp=cfg.amp, rho=cfg.rho, m=cfg.m)
    grid = cfg.grid()
    scales = [0.25, 0.5, 0.75, 1.0]
    fields, values = [], []
    for a in scales:
        member = alx.rescale(L, a).hamiltonian
        f, v, _ = ph.phase_function_graphical(member, grid=grid, dt=cfg.dt)
        fields.append(f)
        values.append(v)
    fam = ph.PhaseFamily(scales, fields, values)
    integrals, _ = ph.phase_integral(fam)
    for a, ival in zip(scales, integrals):
        measured[f"integral_a_{a}"] = ival
    sup_f = float(np.max(np.abs(fields[-1].values)))
    measured["sup_f_at_1"] = sup_f
    expected["integral_a_1.0"] = {"value": 0.0, "provenance": "[PAPER]"}
    expected["sup_f_at_1"] = {"value": 0.0, "provenance": "[PAPER]"}
    passed["integral_vanishes"] = abs(integrals[-1]) <= tol_int * VOL
    passed["phase_sup"] = sup_f <= tol_sup


_RUNNERS = {
    "E1": _e1, "E2": _e2, "E3": _e3, "E4": _e4, "E5": _e5,
    "E6": _e6, "E7": _e7, "E8": _e8, "E9": _e9,
}
