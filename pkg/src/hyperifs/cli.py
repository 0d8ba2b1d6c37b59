"""Command-line runner: ``hyperifs run ...`` and ``hyperifs verify-certificate ...``.

Exit status 0 means the experiment ran, whatever it found. Nonzero codes are
reserved for inputs that prevent a run.
"""
from __future__ import annotations

import argparse
import json
import os
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import CORPUS, ConfigError, UnknownSystemError, build_system, config_for, config_hash
from .hutchinson import attractor_convergence, hyperspace_equicontinuity_probe, orbit_masks
from .minimality import (
    certificate_dict,
    convergence_time_bound,
    find_attracting_fixed_points,
    minimality_probe,
    verify_certificate,
)
from .pointwise import classify_point, d_phi_estimate, sensitivity_probe
from .report import circle_rings, filmstrip, heatmap_strip, line_chart, write_csv, write_json, write_svg
from .shadowing import delta_schedule, generate_pseudo_orbit, infinite_shadowing_test, random_seed_set
from .spaces import CompactSet, SpaceKind, hausdorff_masks, random_mask
from .symbolic import verify_prepend_equicontinuous, verify_shift_sensitive

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_UNKNOWN_SYSTEM = 4
EXIT_PARAMETER = 5
EXIT_CERT_MALFORMED = 6
EXIT_CERT_FAILED = 7

COVER_WORD_LEN = {SpaceKind.INTERVAL: 12, SpaceKind.CIRCLE: 200, SpaceKind.SHIFT: 16}

EXPERIMENTS = ("attractor", "equicontinuity", "minimality", "pointwise", "shadowing", "symbolic")


class ParameterError(ValueError):
    pass


def _apply_thread_cap():
    cap = os.environ.get("HYPERIFS_THREADS")
    if not cap:
        return
    try:
        n = int(cap)
    except ValueError:
        raise ParameterError(f"HYPERIFS_THREADS must be a positive integer, got {cap!r}") from None
    if n < 1:
        raise ParameterError(f"HYPERIFS_THREADS must be a positive integer, got {cap!r}")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _positive(name, value):
    if value is not None and not value > 0:
        raise ParameterError(f"--{name} must be positive, got {value}")


def _words(words) -> str:
    return " ".join(str(w) for w in words)


def _point(space, x):
    return int(x) if space.kind is SpaceKind.SHIFT else float(x)


def _bound_for(sys, eps, max_len):
    if sys.space.kind is SpaceKind.SHIFT:
        return None, None
    afps = find_attracting_fixed_points(sys)
    if not afps:
        return None, None
    bound = convergence_time_bound(sys, afps[0], eps, max_len)
    return afps[0], bound


def _bound_summary(bound) -> dict | None:
    if bound is None:
        return None
    return {
        "found": bound.found,
        "N": bound.N,
        "k_U": bound.k_U,
        "n0": bound.n0,
        "s_eps": bound.s_eps,
        "delta": bound.delta,
        "reason": bound.reason,
    }


def _render_orbit(space, masks, labels, title):
    if space.kind is SpaceKind.CIRCLE:
        return circle_rings(space, masks, title)
    return filmstrip(space, masks, labels, title)


# experiments -----------------------------------------------------------------

def run_attractor(sys, args, out: Path, meta: dict) -> dict:
    space = sys.space
    eps = args.eps or 0.05
    if eps <= 2 * space.cell_diameter:
        raise ParameterError("--eps must exceed two cell diameters")
    max_len = args.max_word_len or 16
    bound = None
    if eps > 4 * space.cell_diameter:
        _, bound = _bound_for(sys, eps, max_len)
    horizon = args.horizon or (4 * bound.N if bound is not None and bound.found and bound.N else 64)
    meta["horizon"] = horizon
    rng = np.random.default_rng(args.seed)
    trials = args.trials if args.trials is not None else 20
    seeds = [space.singleton(space.centers[0])]
    labels = [f"{{{_point(space, space.centers[0])}}}"]
    for _ in range(trials):
        x = space.centers[int(rng.integers(space.size))]
        seeds.append(space.singleton(x))
        labels.append(f"{{{_point(space, x)}}}")
    for k in range(max(1, trials // 4)):
        seeds.append(CompactSet(space, random_mask(space, rng)))
        labels.append(f"fat{k}")
    rep = attractor_convergence(sys, space.full(), seeds, eps, horizon)
    rows = []
    for label, s in zip(labels, rep.seeds):
        for j, (d, c) in enumerate(zip(s.distances, s.cardinalities)):
            rows.append({"seed": label, "j": j, "d_H": float(d), "cells": int(c)})
    write_csv(out / "attractor_trace.csv", rows, ["seed", "j", "d_H", "cells"])
    hits = [s.first_hit for s in rep.seeds]
    summary = {
        **meta,
        "eps": eps,
        "target": "X",
        "seeds": [
            {"seed": l, "first_hit": s.first_hit, "stays_below": s.stays_below} for l, s in zip(labels, rep.seeds)
        ],
        "first_hit_seed0": hits[0],
        "max_first_hit": None if None in hits else max(hits),
        "all_converged": rep.converged,
        "bound": _bound_summary(bound),
        "bound_sound": (
            bool(bound is not None and bound.found and None not in hits and max(hits) <= bound.N)
            if bound is not None
            else None
        ),
    }
    write_json(out / "attractor_summary.json", summary)
    first = rep.seeds[0]
    shown = {labels[k]: rep.seeds[k].distances for k in range(min(6, len(seeds)))}
    write_svg(out / "attractor_trace.svg", line_chart(shown, f"d_H(F^j(seed), X) for {sys.name}", "j", "d_H", {"eps": eps}))
    stop = min(horizon, (first.first_hit or 12) + 2, 24)
    orbit = list(orbit_masks(sys, seeds[0].mask, stop))
    write_svg(out / "attractor_orbit.svg", _render_orbit(space, orbit, [f"F^{j}" for j in range(len(orbit))], f"orbit of {labels[0]}"))
    print(f"attractor: first hit for {labels[0]} at eps={eps}: {hits[0]}; all converged: {rep.converged}"
          + (f"; bound N={bound.N}" if bound is not None and bound.found else ""))
    return summary


def run_equicontinuity(sys, args, out: Path, meta: dict) -> dict:
    space = sys.space
    eps = args.eps or 0.05
    if eps <= 4 * space.cell_diameter:
        raise ParameterError("--eps must exceed four cell diameters")
    trials = args.trials or 100
    horizon = args.horizon
    bound = None
    if horizon is None:
        _, bound = _bound_for(sys, eps, args.max_word_len or 16)
        horizon = 4 * bound.N if bound is not None and bound.found and bound.N else 64
    meta["horizon"] = horizon
    probe = hyperspace_equicontinuity_probe(sys, eps, trials, horizon, seed=args.seed)
    write_csv(
        out / "equicontinuity_ladder.csv",
        [{"delta": d, "pairs": n, "violations": v} for d, n, v in probe.ladder],
        ["delta", "pairs", "violations"],
    )
    witnesses = [
        {"delta": w.delta, "initial_distance": w.initial_distance, "d_F": w.d_F, "index": w.index,
         "a": w.a.to_json(), "b": w.b.to_json()}
        for w in probe.witness_pairs
    ]
    summary = {**meta, "eps": eps, "delta_found": probe.delta_found, "trials": trials,
               "bound": _bound_summary(bound), "witnesses": witnesses}
    write_json(out / "equicontinuity_summary.json", summary)
    if probe.witness_pairs:
        w = probe.witness_pairs[0]
        pair = (w.a.mask, w.b.mask)
        title = f"violating pair at delta={w.delta:.4g}"
    else:
        pair = (space.singleton(space.centers[0]).mask, space.ball(space.centers[0], (probe.delta_found or eps) / 2).mask)
        title = "representative pair within delta"
    trace = [float(hausdorff_masks(space, a, b)) for a, b in zip(orbit_masks(sys, pair[0], horizon), orbit_masks(sys, pair[1], horizon))]
    write_svg(out / "equicontinuity_trace.svg", line_chart({"d_H(F^i a, F^i b)": trace}, title, "i", "d_H", {"eps": eps}))
    print(f"equicontinuity: eps={eps} horizon={horizon} delta_found={probe.delta_found} witnesses={len(witnesses)}")
    return summary


def run_minimality(sys, args, out: Path, meta: dict) -> dict:
    space = sys.space
    eps = args.eps or 0.05
    if eps <= 4 * space.cell_diameter:
        raise ParameterError("--eps must exceed four cell diameters")
    max_len = args.max_word_len or 16
    # rotation covers need long words; bounds come from the contracting pole and stay short
    cover_len = args.max_word_len or COVER_WORD_LEN[space.kind]
    probe = minimality_probe(sys, eps, cover_len, trials=args.trials)
    write_csv(
        out / "minimality_covers.csv",
        [{"ball": k, "complete": c.complete, "covered_fraction": c.covered_fraction, "k_U": c.k_U,
          "words": _words(c.words)} for k, c in enumerate(probe.certificates)],
        ["ball", "complete", "covered_fraction", "k_U", "words"],
    )
    afps = find_attracting_fixed_points(sys) if space.kind is not SpaceKind.SHIFT else []
    bound = convergence_time_bound(sys, afps[0], eps, max_len) if afps else None
    cert_path = None
    if bound is not None and bound.found and bound.afp is not None and bound.N:
        cert_path = write_json(out / "certificate.json", certificate_dict(sys, bound))
    summary = {
        **meta,
        "eps": eps,
        "minimal_up_to_resolution": probe.minimal_up_to_resolution,
        "balls_checked": len(probe.certificates),
        "failing_ball": None if probe.failing_ball is None else probe.failing_ball.to_json(),
        "attracting_fixed_points": [a.to_dict() for a in afps],
        "bound": _bound_summary(bound),
        "certificate": None if cert_path is None else cert_path.name,
    }
    write_json(out / "minimality_summary.json", summary)
    print(f"minimality: minimal up to resolution: {probe.minimal_up_to_resolution}; "
          f"attracting fixed points: {len(afps)}" + (f"; bound N={bound.N}" if bound is not None and bound.found else ""))
    return summary


def run_pointwise(sys, args, out: Path, meta: dict) -> dict:
    space = sys.space
    eps = args.eps or (0.5 if space.kind is SpaceKind.SHIFT else 0.1)
    if eps <= 4 * space.cell_diameter:
        raise ParameterError("--eps must exceed four cell diameters")
    max_len = args.max_word_len or 48
    count = args.trials or 100
    if space.kind is SpaceKind.SHIFT:
        xs = np.linspace(0, space.size - 1, min(count, space.size)).round().astype(np.int64)
    else:
        xs = np.unique(space.wrap(np.linspace(0, 1, count, endpoint=space.kind is SpaceKind.INTERVAL)))
        xs = space.centers[space.index_of(xs)]
    rows, deltas = [], []
    for x in xs:
        v = classify_point(sys, x, eps, max_len, beam=512)
        row = {"x": _point(space, x), "eps": eps, "delta_found": v.delta_found}
        if v.witness is not None:
            wit = v.witness
            row.update(y=wit.y, d=float(space.metric(x, wit.y)), word=str(wit.word), separation=wit.separation,
                       rejected_delta=wit.delta)
        rows.append(row)
        deltas.append(v.delta_found)
    write_csv(out / "pointwise_verdicts.csv", rows,
              ["x", "eps", "delta_found", "y", "d", "word", "separation", "rejected_delta"])
    sens = sensitivity_probe(sys, eps, max_len)
    write_csv(out / "sensitivity_balls.csv",
              [{"center": _point(space, c), "radius": sens.radius, "diameter_lower_bound": float(d)}
               for c, d in zip(sens.centers, sens.diameters)],
              ["center", "radius", "diameter_lower_bound"])
    a, b = space.centers[0], space.centers[min(space.size - 1, max(1, space.size // 8))]
    dphi = d_phi_estimate(sys, a, b, min(max_len, 12))
    summary = {
        **meta,
        "eps": eps,
        "points": len(xs),
        "equicontinuous": int(sum(d is not None for d in deltas)),
        "sensitive_points": int(sum(d is None for d in deltas)),
        "sensitive_system": sens.sensitive,
        "min_open_diameter": sens.min_open_diameter,
        "sample_pair": {"x": _point(space, a), "y": _point(space, b), "d": dphi.distance,
                        "d_phi_lower": dphi.lower, "certified_sup": dphi.certified_sup},
    }
    write_json(out / "pointwise_summary.json", summary)
    write_svg(out / "pointwise_delta.svg",
              heatmap_strip(xs, deltas, f"delta_found over x ({sys.name}, eps={eps})", "delta_found"))
    print(f"pointwise: {summary['equicontinuous']} of {len(xs)} points equicontinuous at eps={eps}; "
          f"system sensitive: {sens.sensitive} (min ball diameter {sens.min_open_diameter:.4g})")
    return summary


def run_shadowing(sys, args, out: Path, meta: dict) -> dict:
    space = sys.space
    eps = args.eps or 0.1
    length = args.horizon or 500
    trials = args.trials or 10
    meta["horizon"] = length
    schedule = None
    delta = args.delta
    if delta is None:
        schedule = delta_schedule(sys, eps, length, seed=args.seed)
        delta = schedule.delta
    if delta is not None and delta <= 2 * space.cell_diameter:
        raise ParameterError(f"--delta must exceed two cell diameters ({2 * space.cell_diameter})")
    rng = np.random.default_rng(args.seed)
    kinds = ("dilate", "erode", "jitter", "adversarial")
    reports, rows = [], []
    first = None
    if delta is None:
        outcome = "no delta schedule: orbits do not settle near X"
    else:
        for t in range(trials):
            kind = kinds[t % len(kinds)]
            po = generate_pseudo_orbit(sys, random_seed_set(space, rng), length, delta, kind, rng=rng)
            rep = infinite_shadowing_test(sys, po, eps, rng=rng)
            d = rep.to_dict()
            d.update(trial=t, perturbation=kind, max_defect=float(po.defects.max()))
            d.pop("shadow_seed")
            reports.append(d)
            if rep.errors is not None:
                for i, e in enumerate(rep.errors):
                    rows.append({"trial": t, "i": i, "defect": float(po.defects[i - 1]) if i else 0.0, "tracking_error": float(e)})
            if first is None:
                first = (po, rep)
        outcome = f"{sum(r['shadowed'] for r in reports)} of {trials} pseudo-orbits shadowed"
    write_csv(out / "shadowing_tracking.csv", rows, ["trial", "i", "defect", "tracking_error"])
    summary = {
        **meta,
        "eps": eps,
        "delta": delta,
        "schedule": None if schedule is None else {"window": schedule.window, "tried": schedule.tried},
        "trials": reports,
        "all_shadowed": bool(reports) and all(r["shadowed"] for r in reports),
        "max_tracking_error": max((r["max_tracking_error"] for r in reports), default=None),
        "outcome": outcome,
    }
    write_json(out / "shadowing_report.json", summary)
    if first is not None:
        po, rep = first
        full = np.ones(space.size, dtype=bool)
        series = {"d_H(X_i, X)": hausdorff_masks(space, po.masks, full[None, :])}
        if rep.errors is not None:
            series["d_H(F^i Y, X_i)"] = rep.errors
        write_svg(out / "shadowing_trace.svg", line_chart(series, f"pseudo-orbit vs shadow ({sys.name})", "i", "d_H", {"eps": eps}))
    print(f"shadowing: eps={eps} delta={delta}: {outcome}")
    return summary


def run_symbolic(sys, args, out: Path, meta: dict) -> dict:
    space = sys.space
    if space.kind is not SpaceKind.SHIFT:
        raise ParameterError("the symbolic experiment needs a shift-space system")
    depth = space.resolution
    eps = args.eps or max(0.05, 2.0 ** (2 - depth))
    if eps < 2.0 ** (2 - depth):
        raise ParameterError(f"--eps must be at least 2^(2-depth) = {2.0 ** (2 - depth)}")
    equi = verify_prepend_equicontinuous(min(depth, 8), max(eps, 2.0 ** (2 - min(depth, 8))))
    sens = verify_shift_sensitive(depth)
    write_csv(out / "symbolic_witnesses.csv", [w.to_row() for w in sens.witnesses],
              ["cylinder", "eta", "omega", "shifts", "initial_distance", "separation"])
    summary = {
        **meta,
        "eps": eps,
        "depth": depth,
        "prepend": {"depth": equi.depth, "eps": equi.eps, "delta": equi.delta, "holds": equi.holds,
                    "max_ratio": equi.max_ratio, "exact_halving": equi.exact_halving,
                    "pairs": equi.pairs_checked, "words": equi.words_checked},
        "shift": {"sensitivity_constant": sens.sensitivity_constant, "witnesses": len(sens.witnesses)},
    }
    write_json(out / "symbolic_summary.json", summary)
    print(f"symbolic: shift sensitivity constant {sens.sensitivity_constant}; "
          f"prepend delta = eps = {equi.delta} (max ratio {equi.max_ratio})")
    return summary


RUNNERS = {
    "attractor": run_attractor,
    "equicontinuity": run_equicontinuity,
    "minimality": run_minimality,
    "pointwise": run_pointwise,
    "shadowing": run_shadowing,
    "symbolic": run_symbolic,
}


def cmd_run(args) -> int:
    for name in ("eps", "delta", "resolution", "horizon", "max_word_len", "trials"):
        _positive(name.replace("_", "-"), getattr(args, name))
    config = config_for(args.system)
    sys = build_system(config, args.resolution)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "tool": f"hyperifs {__version__}",
        "experiment": args.experiment,
        "system": config.get("name", args.system),
        "config_hash": config_hash(config),
        "space": sys.space.kind.value,
        "resolution": sys.space.resolution,
        "horizon": args.horizon,
        "max_word_len": args.max_word_len,
        "seed": args.seed,
    }
    RUNNERS[args.experiment](sys, args, out, meta)
    return EXIT_OK


def cmd_verify(args) -> int:
    path = Path(args.path)
    try:
        cert = json.loads(path.read_text())
        if cert.get("format") != "hyperifs-certificate/1":
            raise ValueError("not a hyperifs certificate")
        if not cert.get("found"):
            raise ValueError("certificate records no bound")
    except OSError as exc:
        print(f"error: cannot read certificate {path}: {exc.strerror}", file=_sys.stderr)
        return EXIT_CERT_MALFORMED
    except (ValueError, AttributeError) as exc:
        print(f"error: malformed certificate {path}: {exc}", file=_sys.stderr)
        return EXIT_CERT_MALFORMED
    _positive("resolution", args.resolution)
    slack = args.slack
    if slack is None:
        slack = 0.0
        if args.resolution is not None:
            coarse = build_system(cert["system"]).space.cell_diameter
            slack = coarse
    try:
        check = verify_certificate(cert, args.resolution, slack)
    except (KeyError, TypeError, IndexError) as exc:
        print(f"error: malformed certificate {path}: missing or invalid field {exc}", file=_sys.stderr)
        return EXIT_CERT_MALFORMED
    for name, ok in check.checks.items():
        print(f"{name:10s} {'ok' if ok else 'FAILED'}")
    print("certificate verified" if check.ok else "certificate FAILED")
    return EXIT_OK if check.ok else EXIT_CERT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperifs", description="Hyperspace experiments for iterated function systems.")
    p.add_argument("--version", action="version", version=f"hyperifs {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment on one system")
    r.add_argument("--system", required=True, help=f"corpus name ({', '.join(CORPUS)}) or a .json/.toml config path")
    r.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    r.add_argument("--eps", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--resolution", type=int, help="cells per unit (interval, circle) or depth (shift)")
    r.add_argument("--horizon", type=int, help="iteration horizon; pseudo-orbit length for shadowing")
    r.add_argument("--max-word-len", dest="max_word_len", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="hyperifs-out", help="output directory")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify-certificate", help="re-check a convergence certificate")
    v.add_argument("path")
    v.add_argument("--resolution", type=int)
    v.add_argument("--slack", type=float, help="tolerance for re-rasterization (default: one original cell)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        return args.func(args)
    except UnknownSystemError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_UNKNOWN_SYSTEM
    except ConfigError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except (ParameterError, ValueError) as exc:
        print(f"error: parameter out of range: {exc}", file=_sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    raise SystemExit(main())
