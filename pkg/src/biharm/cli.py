"""Benchmark harness reproducing the accuracy tables for the Gaussian test
density, plus a self-verification mode cross-checking the numerical layers.

Heavy imports happen inside functions so that --threads can pin the BLAS and
OpenMP pool sizes before numpy first loads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

from .errors import BiharmError

__all__ = ["RunConfig", "RateRow", "run_table", "run_verify", "emit_plot_data", "main"]

_CSV_HEADER = "n,M,h,x1,exact,approx,abs_err,rel_err,rate"

_TABLE_DIMS = {
    "1": (5, 10, 100, 10**3, 10**4, 10**5, 10**6, 10**7),
    "2": (5, 50, 500, 5000, 50000),
    "3": (10**5, 10**6, 10**7),
    "4": (3,),
}
_TABLE_ORDERS = {"1": (4,), "2": (4, 3, 2, 1), "3": (4, 3), "4": (4, 3, 2, 1)}
_REFINEMENT = (10, 20, 40, 80, 160)
_TABLE_STEPS = {"1": (40,), "2": _REFINEMENT, "3": _REFINEMENT, "4": _REFINEMENT}
_TABLE1_X1 = (0.0, 1.0, 2.0, 3.0, 4.0)

_CONFIG_KEYS = ("dims", "orders", "steps", "delta", "quad_a", "quad_b",
                "quad_tau", "quad_nodes", "out", "plot_out", "threads")


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one table run (defaults match the benchmarks)."""

    table: str = "custom"
    dims: tuple = ()
    orders: tuple = ()
    steps: tuple = ()
    delta: float = 5.0
    quad_a: float = 6.0
    quad_b: float = 5.0
    quad_tau: float = 0.003
    quad_nodes: int = 300
    out: str | None = None
    plot_out: str | None = None
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.table not in ("1", "2", "3", "4", "custom"):
            raise ValueError(f"unknown table selector {self.table!r}")
        if not self.dims or not self.orders or not self.steps:
            raise ValueError("dims, orders, and steps must all be nonempty")
        if any(n < 3 for n in self.dims):
            raise ValueError("dimensions must be at least 3")
        if any(m < 1 for m in self.orders):
            raise ValueError("orders must be at least 1")
        if any(s < 1 for s in self.steps):
            raise ValueError("steps are reciprocal grid widths and must be >= 1")
        if not (self.delta > 0 and self.quad_a > 0 and self.quad_b > 0 and self.quad_tau > 0):
            raise ValueError("delta and quadrature parameters must be positive")
        if self.quad_nodes < 1:
            raise ValueError("quad_nodes must be at least 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class RateRow:
    """One benchmark measurement; rate is blank on the coarsest grid."""

    n: int
    M: int
    h: float
    x1: float
    exact: float
    approx: float
    abs_err: float
    rel_err: float
    rate: float | None


def _fmt(x: float) -> str:
    return f"{x:.15e}"


def _potential(n: int, M: int, h_inv: int, x1: float, delta: float, rule, cache) -> float:
    from .engine import (AxisPoint, IsotropicGaussianPolyDensity, build_test_density,
                         evaluate, evaluate_symmetric)
    from .kernels import GridSpec

    h = 1.0 / h_inv
    k1 = round(x1 * h_inv)
    if abs(x1 * h_inv - k1) > 1e-9:
        raise ValueError(f"x1 = {x1} does not lie on the grid h = 1/{h_inv}")
    grid = GridSpec(h=h, delta=delta)
    if n == 3:
        dens = cache.get(h_inv)
        if dens is None:
            dens = cache[h_inv] = build_test_density(3, grid)
        return evaluate(dens, [(k1, k1, k1)], 3, grid, M, rule)[0].value
    if n == 4:
        from .errors import UnsupportedDimension
        raise UnsupportedDimension(
            "n = 4 has no one-dimensional integral representation; "
            "supported dimensions are n = 3 and n >= 5")
    dens = IsotropicGaussianPolyDensity(
        c0=4.0 * n * (n + 2), c1=-16.0 * (n + 2), c2=16.0, n=n)
    return evaluate_symmetric(dens, AxisPoint(k1), grid, M, rule).value


def _compute_rows(cfg: RunConfig) -> list:
    """Potential of the Gaussian test density along the refinement schedule.

    Points are x1 * e1 for n >= 5 (fast symmetric path) and x1 * (1,1,1) for
    n = 3 (general tensor path); the exact potential is e^{-|x|^2}.
    """
    from .quad import DEQuadrature

    rule = DEQuadrature(a=cfg.quad_a, b=cfg.quad_b, tau=cfg.quad_tau,
                        s_begin=0, s_end=cfg.quad_nodes)
    x1_list = _TABLE1_X1 if cfg.table == "1" else (1.0,)
    rows = []
    cache: dict = {}
    for n in cfg.dims:
        for M in cfg.orders:
            for x1 in x1_list:
                prev = None
                for h_inv in cfg.steps:
                    approx = _potential(n, M, h_inv, x1, cfg.delta, rule, cache)
                    exact = math.exp(-(3.0 if n == 3 else 1.0) * x1 * x1)
                    abs_err = abs(approx - exact)
                    rel_err = abs_err / abs(exact)
                    rate = None
                    if prev is not None and prev > 0.0 and abs_err > 0.0:
                        rate = math.log2(prev / abs_err)
                    rows.append(RateRow(n=n, M=M, h=1.0 / h_inv, x1=x1, exact=exact,
                                        approx=approx, abs_err=abs_err,
                                        rel_err=rel_err, rate=rate))
                    prev = abs_err
    return rows


def _format_csv(rows: list) -> str:
    lines = [_CSV_HEADER]
    for r in rows:
        rate = "" if r.rate is None else _fmt(r.rate)
        lines.append(",".join([str(r.n), str(r.M), _fmt(r.h), _fmt(r.x1), _fmt(r.exact),
                               _fmt(r.approx), _fmt(r.abs_err), _fmt(r.rel_err), rate]))
    return "\n".join(lines) + "\n"


def run_table(cfg: RunConfig) -> str:
    """CSV document with one row per (n, M, h, point) of the configured table."""
    return _format_csv(_compute_rows(cfg))


def emit_plot_data(rows: list, path) -> None:
    """Two-column (h, abs_err) blocks per (n, M) series, blank-line separated."""
    if not rows:
        raise ValueError("rows must be nonempty")
    blocks: list = []
    key = None
    for r in rows:
        if (r.n, r.M) != key:
            key = (r.n, r.M)
            blocks.append([])
        blocks[-1].append(f"{_fmt(r.h)} {_fmt(r.abs_err)}")
    text = "\n\n".join("\n".join(b) for b in blocks) + "\n"
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path}: {exc}") from exc


def _verify_checks(level: str):
    """Yield (name, ok, detail) for each cross-module invariant."""
    import numpy as np

    from . import engine, kernels, quad, specfun
    from .kernels import GridSpec

    rng = np.random.default_rng(20240611)
    rule = quad.DEFAULT_RULE

    def rel_dev(approx, ref):
        approx = np.asarray(approx, dtype=float)
        ref = np.asarray(ref, dtype=float)
        return float(np.max(np.abs(approx - ref) / np.maximum(np.abs(ref), 1e-300)))

    # closed-form values at r = 0 and r = 1, frozen from the explicit formulas
    euler_gamma = 0.5772156649015329
    e1_at_1 = 0.21938393439552029
    anchors = [
        (kernels.phi2(3, 0.0), -0.25),
        (kernels.phi2(4, 0.0), (euler_gamma - 1.0) / 16.0),
        (kernels.phi2(5, 0.0), 1.0 / 12.0),
        (kernels.phi2(6, 0.0), 1.0 / 32.0),
        (kernels.phi2(3, 1.0),
         -math.exp(-1.0) / 8.0 - math.sqrt(math.pi) / 16.0 * math.erf(1.0) * 3.0),
        (kernels.phi2(4, 1.0), (math.expm1(-1.0) - e1_at_1) / 16.0),
        (kernels.phi2(5, 1.0),
         (math.exp(-1.0) + math.sqrt(math.pi) * math.erf(1.0) / 2.0) / 16.0),
        (kernels.phi2(6, 1.0), math.exp(-1.0) / 16.0),
    ]
    dev = max(rel_dev(a, b) for a, b in anchors)
    yield "phi2 closed-form anchors", dev <= 1e-13, f"max_rel={dev:.2e} tol=1e-13"

    t0, tp0 = quad.de_transform(0.0, 6.0, 5.0)
    ref_t0 = math.exp(-30.0 + 6.0 * math.exp(-5.0))
    ref_ratio = 60.0 * (1.0 + math.exp(-5.0))
    dev = max(abs(t0 / ref_t0 - 1.0), abs(tp0 / t0 / ref_ratio - 1.0))
    yield "double-exponential transform anchor", dev <= 1e-13, f"max_rel={dev:.2e} tol=1e-13"

    rs = [0.0, 0.5, 1.0, 2.0, 4.0]
    for n in (3, 5, 6, 10, 100):
        dev = max(rel_dev(quad.integral_phi2(n, r, rule), kernels.phi2(n, r)) for r in rs)
        yield (f"node-sum integral vs closed form, n={n}", dev <= 1e-11,
               f"max_rel={dev:.2e} tol=1e-11")

    xs = rng.uniform(-3.0, 3.0, size=100)
    ts = rng.uniform(0.0, 10.0, size=100)
    u = 1.0 + ts
    q1 = np.ones_like(xs)
    q2 = -xs**2 / u**2 + 0.5 / u + 1.0
    q3 = q2 + xs**4 / (2 * u**4) - 1.5 * xs**2 / u**3 + 3.0 / (8 * u**2)
    q4 = (q3 - xs**6 / (6 * u**6) + 1.25 * xs**4 / u**5 - 15 * xs**2 / (8 * u**4)
          + 5.0 / (16 * u**3))
    r1 = xs**2 / u
    r2 = (-xs**4 / u**3 + xs**2 / u + 2.5 * xs**2 / u**2 - 0.5 / u)
    r3 = (r2 + xs**6 / (2 * u**5) - 3.5 * xs**4 / u**4 + 39 * xs**2 / (8 * u**3)
          - 0.75 / u**2)
    r4 = (r3 - xs**8 / (6 * u**7) + 2.25 * xs**6 / u**6 - 65 * xs**4 / (8 * u**5)
          + 125 * xs**2 / (16 * u**4) - 15.0 / (16 * u**3))
    for m, q_ref, r_ref in ((1, q1, r1), (2, q2, r2), (3, q3, r3), (4, q4, r4)):
        dev_q = rel_dev(quad.qm_poly(m, xs, ts), q_ref)
        dev_r = rel_dev(quad.rm_poly(m, xs, ts), r_ref)
        yield (f"Hermite-sum vs printed polynomial, order {m}",
               max(dev_q, dev_r) <= 1e-12, f"max_rel={max(dev_q, dev_r):.2e} tol=1e-12")

    half = quad.DEQuadrature(a=6.0, b=5.0, tau=0.0015, s_begin=0, s_end=600)
    dev = max(rel_dev(quad.integral_phi2(n, r, half), quad.integral_phi2(n, r, rule))
              for n in (5, 10, 100) for r in (0.0, 1.0, 2.0))
    yield "node-spacing self-consistency", dev <= 1e-12, f"max_rel={dev:.2e} tol=1e-12"

    try:
        for n in (3, 5, 10, 100):
            for r in (0.0, 2.0):
                quad.integral_phi2(n, r, rule)
        yield "node-sum tail certification", True, "last-node share below 1e-16"
    except BiharmError as exc:
        yield "node-sum tail certification", False, str(exc)

    for n in (5, 6):
        ref = 16.0 * (math.pi * 5.0) ** (-n / 2.0) * quad.integral_phi2(n, 0.0, rule)
        got = quad.tensor_weight((0,) * n, 1, 5.0, rule, n=n)
        dev = rel_dev(got, ref)
        yield (f"lattice weight at zero offset, n={n}", dev <= 1e-13,
               f"max_rel={dev:.2e} tol=1e-13")

    node = rule.nodes()[40]
    samples = np.zeros(21)
    samples[10 + 3] = 1.0
    got = engine.conv1d(samples, node, 5.0, 1, k=3)
    ref = 1.0 / math.sqrt(math.pi * 5.0 * (1.0 + node.t))
    dev = rel_dev(got, ref)
    yield "convolution of a lattice delta", dev <= 1e-14, f"max_rel={dev:.2e} tol=1e-14"

    dev = 0.0
    for n in (3, 5, 6, 10):
        for m in (2, 3):
            for r in (0.0, 0.5, 1.0, 2.0):
                x = r * r
                step = (math.exp(-x) / 16.0
                        * specfun.gen_laguerre(m - 2, n / 2.0 - 1.0, x)
                        / ((m - 1) * m))
                diff = kernels.phi2M(n, m + 1, r) - kernels.phi2M(n, m, r)
                dev = max(dev, abs(diff - step))
    yield "order-increment ladder identity", dev <= 1e-13, f"max_abs={dev:.2e} tol=1e-13"

    eps0 = engine.saturation_epsilon0(1, 5.0, 5).epsilon0
    yield "saturation error floor", eps0 < 1e-19, f"eps0={eps0:.2e} tol=1e-19"

    # direct summation oracle on a compactly supported rank-1 density
    # (zero-padded ends: the whole support is inside the sample window)
    h = 0.2
    grid = GridSpec(h=h, delta=5.0)
    m_half = 5
    inner = rng.uniform(0.5, 1.5, size=2 * m_half + 1)
    vec = np.zeros(2 * m_half + 3)
    vec[1:-1] = inner
    dens = engine.SeparatedDensity(weights=(1.0,), factors=((vec,) * 5,),
                                   m_lo=-(m_half + 1))
    offsets = np.arange(-m_half, m_half + 1)
    mapping = {}
    for idx in np.ndindex(*(2 * m_half + 1,) * 5):
        key = tuple(int(offsets[i]) for i in idx)
        mapping[key] = float(np.prod([inner[i] for i in idx]))
    points = [tuple(int(c) for c in rng.integers(-3, 4, size=5)) for _ in range(3)]
    dev = 0.0
    tensor = engine.evaluate(dens, points, 5, grid, 1, rule)
    for sample, point in zip(tensor, points):
        direct = kernels.direct_cubature(mapping, grid, 1,
                                         np.asarray(point, dtype=float) * h, 5)
        dev = max(dev, abs(sample.value / direct.value - 1.0))
    yield "tensor path vs direct summation", dev <= 1e-10, f"max_rel={dev:.2e} tol=1e-10"

    dev = 0.0
    for n in (5, 6, 8):
        grid = GridSpec(h=0.1, delta=5.0)
        dens = engine.build_test_density(n, grid)
        full = engine.evaluate(dens, [(10,) + (0,) * (n - 1)], n, grid, 2, rule)[0].value
        iso = engine.IsotropicGaussianPolyDensity(
            c0=4.0 * n * (n + 2), c1=-16.0 * (n + 2), c2=16.0, n=n)
        fast = engine.evaluate_symmetric(iso, engine.AxisPoint(10), grid, 2, rule).value
        dev = max(dev, abs(fast / full - 1.0))
    yield "symmetric path vs tensor path", dev <= 1e-12, f"max_rel={dev:.2e} tol=1e-12"

    cache: dict = {}
    err = abs(_potential(5, 4, 20, 1.0, 5.0, rule, cache) - math.exp(-1.0))
    ok = 0.35e-8 <= err <= 1.4e-8
    yield "n=5 benchmark anchor (h=1/20)", ok, f"abs_err={err:.2e} expected~7.0e-09"

    if level == "full":
        val = _potential(10**4, 4, 40, 0.0, 5.0, rule, cache)
        rel = abs(val - 1.0)
        ok = 0.129e-6 <= rel <= 0.516e-6
        yield "n=1e4 benchmark anchor (x1=0)", ok, f"rel_err={rel:.2e} expected~2.58e-07"

        err = abs(_potential(5 * 10**4, 4, 40, 1.0, 5.0, rule, cache) - math.exp(-1.0))
        ok = 0.235e-6 <= err <= 0.94e-6
        yield "n=5e4 benchmark anchor (h=1/40)", ok, f"abs_err={err:.2e} expected~4.7e-07"

        err = abs(_potential(10**7, 4, 40, 1.0, 5.0, rule, cache) - math.exp(-1.0))
        ok = 0.475e-4 <= err <= 1.9e-4
        yield "n=1e7 benchmark anchor (h=1/40)", ok, f"abs_err={err:.2e} expected~9.5e-05"


def run_verify(level: str = "quick"):
    """Run the invariant suite; returns (all_passed, report lines)."""
    if level not in ("quick", "full"):
        raise ValueError(f"unknown verification level {level!r}")
    lines = []
    n_pass = n_fail = 0
    for name, ok, detail in _verify_checks(level):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name:45s} {detail}")
        if ok:
            n_pass += 1
        else:
            n_fail += 1
    lines.append(f"{level} verification: {n_pass}/{n_pass + n_fail} checks passed")
    return n_fail == 0, lines


def _load_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        return {}
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(data) - set(_CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return data


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="biharm",
        description="Benchmark high-order cubature of n-dimensional biharmonic "
                    "potentials on the Gaussian test density.")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--table", choices=("1", "2", "3", "4", "custom"),
                      help="emit a benchmark table as CSV")
    mode.add_argument("--verify", choices=("quick", "full"),
                      help="run the cross-module invariant suite")
    p.add_argument("--dims", type=int, nargs="+", metavar="N",
                   help="dimensions (default: the selected table's)")
    p.add_argument("--orders", type=int, nargs="+", metavar="M",
                   help="basis orders M, accuracy h^(2M)")
    p.add_argument("--steps", type=int, nargs="+", metavar="INV_H",
                   help="reciprocal grid widths 1/h")
    p.add_argument("--delta", type=float, help="Gaussian shape parameter D (default 5)")
    p.add_argument("--quad-a", type=float, help="quadrature transform parameter a (default 6)")
    p.add_argument("--quad-b", type=float, help="quadrature transform parameter b (default 5)")
    p.add_argument("--quad-tau", type=float, help="quadrature step tau (default 0.003)")
    p.add_argument("--quad-nodes", type=int, help="number of quadrature nodes (default 300)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--plot-out", help="also write (h, abs_err) blocks for log-log plots")
    p.add_argument("--threads", type=int, help="pin BLAS/OpenMP thread count")
    p.add_argument("--config",
                   help="JSON file with defaults for the parameter flags "
                        "(not --table/--verify)")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_config(args.config) if args.config else {}
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    def pick(flag_value, key, fallback):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, fallback)

    threads = pick(args.threads, "threads", None)
    if threads is None and os.environ.get("BIHARM_THREADS"):
        threads = int(os.environ["BIHARM_THREADS"])
    if threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ[var] = str(threads)

    if args.verify is not None:
        ok, lines = run_verify(args.verify)
        print("\n".join(lines))
        return 0 if ok else 1

    table = args.table
    try:
        cfg = RunConfig(
            table=table,
            dims=tuple(pick(args.dims, "dims", _TABLE_DIMS.get(table, ()))),
            orders=tuple(pick(args.orders, "orders", _TABLE_ORDERS.get(table, ()))),
            steps=tuple(pick(args.steps, "steps", _TABLE_STEPS.get(table, ()))),
            delta=pick(args.delta, "delta", 5.0),
            quad_a=pick(args.quad_a, "quad_a", 6.0),
            quad_b=pick(args.quad_b, "quad_b", 5.0),
            quad_tau=pick(args.quad_tau, "quad_tau", 0.003),
            quad_nodes=pick(args.quad_nodes, "quad_nodes", 300),
            out=pick(args.out, "out", None),
            plot_out=pick(args.plot_out, "plot_out", None),
            threads=threads,
        )
        if table == "1" and (args.steps or args.orders):
            raise ValueError("table 1 is defined at fixed h = 0.025, M = 4; "
                             "use --table custom to vary them")
        rows = _compute_rows(cfg)
    except (BiharmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csv_text = _format_csv(rows)
    try:
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(csv_text)
        else:
            sys.stdout.write(csv_text)
        if cfg.plot_out:
            emit_plot_data(rows, cfg.plot_out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
