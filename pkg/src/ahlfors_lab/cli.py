"""Command-line entry point: ``ahlfors-lab <subcommand> [--config F] [--out D] [--threads N]``.

Numerical modules are imported inside the commands so that ``--threads`` reaches
numba before its thread pool exists.
"""

from __future__ import annotations

import argparse
import os
import sys

COMMANDS = ("gen-locus", "eval-psi", "area-scan", "profile", "torus", "verify")


def build_model(cfg):
    from .lattice_locus import build_zero_locus
    from .surface_geometry import SurfaceModel

    locus = build_zero_locus(cfg.schedule, cfg.cases, cfg.lattice, seed=cfg.seed,
                             marked_count=cfg.marked_count)
    m = cfg.model
    return SurfaceModel(m.alpha, m.m, m.eps1, locus, m.kappa_growth)


def grid_for(cfg, r: float):
    from .quadrature import QuadratureGrid

    q = cfg.quadrature
    if q.n_radial is not None:
        return QuadratureGrid(q.n_radial, q.n_angular, q.refinement_radius, q.local_angular)
    return QuadratureGrid.for_radius(r, q.spacing, refinement_radius=q.refinement_radius,
                                     local_angular=q.local_angular)


def cmd_gen_locus(cfg, stage) -> int:
    from .lattice_locus import build_zero_locus

    loc = build_zero_locus(cfg.schedule, cfg.cases, cfg.lattice, seed=cfg.seed,
                           marked_count=cfg.marked_count)
    rows = zip(loc.points.real, loc.points.imag, loc.annulus, loc.offsets.real,
               loc.offsets.imag, loc.case_tag)
    stage.csv("locus.csv", ["re", "im", "annulus_index", "offset_re", "offset_im", "case_tag"], rows)
    return 0


def cmd_eval_psi(cfg, stage) -> int:
    import numpy as np

    from .canonical_product import log_abs_psi, log_abs_psi1
    from .lattice_locus import build_zero_locus

    loc = build_zero_locus(cfg.schedule, cfg.cases, cfg.lattice, seed=cfg.seed,
                           marked_count=cfg.marked_count)
    e = cfg.eval_psi
    xs = np.linspace(e.re_min, e.re_max, e.n_re)
    ys = np.linspace(e.im_min, e.im_max, e.n_im)
    z = (xs[:, None] + 1j * ys[None, :]).ravel()
    ev, ev1 = log_abs_psi(z, loc), log_abs_psi1(z, loc)
    tail = np.broadcast_to(ev.tail_bound, z.shape)
    rows = zip(z.real, z.imag, ev.log_abs, tail, ev1.log_abs)
    stage.csv("psi_scan.csv", ["z_re", "z_im", "log_abs_psi", "tail_bound", "log_abs_psi1"], rows)
    return 0


def cmd_area_scan(cfg, stage) -> int:
    import math

    from . import nevanlinna_calculus as nc

    model = build_model(cfg)
    rows = []
    for r in cfg.scan_radii:
        grid = grid_for(cfg, r)
        rep = nc.disc_area(r, model, grid)
        order = nc.order_report(r, model, grid) if r >= 1 else None
        t = order.area if order else math.nan
        jt = nc.jensen_order(r, model) if r >= 1 else math.nan
        length = nc.boundary_length(r, model)
        flagged = rep.flagged or bool(order and order.flagged)
        rows.append((float(r), rep.area, rep.estimated_error, t, jt, length,
                     length / rep.area, flagged))
    stage.csv("area_scan.csv", ["r", "area", "error", "T", "jensen_T", "length", "ratio",
                                "flagged"], rows)
    return 0


def _verdicts_for(selector, seq, partition):
    from . import current_profiler as prof

    if selector.kind == "THIRD":
        return [prof.verdict_third(seq)]
    iset = selector.index_set
    if iset.kind == "empty":
        return [prof.verdict_diffuse(p) for _, p in seq]
    if iset.kind == "finite":
        label = f"tube_y{min(iset.elements)}"
        if label not in partition.labels:
            return []
        if selector.parity == "odd":
            return [prof.verdict_tube(p, label, 0.05) for _, p in seq]
        return [prof.verdict_tube_and_rest(p, label, 0.03) for _, p in seq]
    return []


def cmd_profile(cfg, stage) -> int:
    from . import current_profiler as prof
    from .lattice_locus import marked_points

    model = build_model(cfg)
    pc = cfg.profiler
    ys = marked_points(cfg.marked_count)
    partition = prof.RegionPartition(pc.log_m, pc.eps_t, tuple(ys[k - 1] for k in pc.marked_classes),
                                     pc.marked_classes)
    rows, lines = [], []
    for text in pc.selectors:
        sel = prof.SubsequenceSelector.parse(text)
        try:
            seq = [(j, prof.mass_profile(r, partition, model, grid_for(cfg, r)))
                   for j, r in sel.entries(model)]
        except prof.ProfileRangeError as exc:
            lines.append(f"SKIP {sel}: {exc}")
            continue
        for j, p in seq:
            for label, frac in zip(p.labels, p.fractions):
                rows.append((str(sel), j, p.radius, label, float(frac), p.total_area))
        lines.extend(f"{v.line()} [{sel}]" for v in _verdicts_for(sel, seq, partition))
    radii = model.locus.radii
    if len(radii) >= 2:
        q = [prof.horizontal_probe_mass(r, pc.probe_u0, pc.probe_eps, pc.delta_prime, model) / r**2
             for r in radii[:2]]
        ok = q[1] <= 0.5 * q[0]
        lines.append(f"{'PASS' if ok else 'FAIL'} horizontal probe decay: mass/r^2 = "
                     f"{q[0]:.6g} at r = {radii[0]:g}, {q[1]:.6g} at r = {radii[1]:g}")
    stage.csv("profiles.csv", ["selector", "j", "r", "region_label", "fraction", "total_area"], rows)
    stage.text("verdicts.txt", "".join(line + "\n" for line in lines))
    for line in lines:
        print(line)
    return 0


def cmd_torus(cfg, stage) -> int:
    from .torus_examples import TorusLineModel, torus_intersection_count

    t = cfg.torus
    model = TorusLineModel(t.slope, t.m1, t.m2, t.b1, t.b2, t.domain_radius)
    rows = []
    for r in t.radii:
        n = torus_intersection_count(r, model)
        rows.append((float(r), n, n / r**2))
    stage.csv("torus_counts.csv", ["r", "count", "count_over_r2"], rows)
    return 0


def cmd_verify(cfg, stage) -> int:
    from .verify import run_suite

    results = run_suite(lambda c: print(c.line(), flush=True))
    stage.csv("verify.csv", ["check", "status", "measured", "bound"],
              [(c.name, "PASS" if c.passed else "FAIL", c.measured, c.bound) for c in results])
    failed = sum(not c.passed for c in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


HANDLERS = {
    "gen-locus": cmd_gen_locus,
    "eval-psi": cmd_eval_psi,
    "area-scan": cmd_area_scan,
    "profile": cmd_profile,
    "torus": cmd_torus,
    "verify": cmd_verify,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ahlfors-lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML experiment file (defaults if omitted)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, default=0, help="worker threads, 0 = auto")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return 2
    if args.threads > 0:
        os.environ["NUMBA_NUM_THREADS"] = str(args.threads)

    from .config import ConfigError, load_config
    from .csvio import Staging

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.output_dir
    stage = Staging(out_dir)
    status = HANDLERS[args.command](cfg, stage)
    stage.commit()
    return status


if __name__ == "__main__":
    sys.exit(main())
