#!/usr/bin/env python3
"""Sweep generator parameters and report acceptance-criterion margins."""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from dataclasses import replace

sys.path.insert(0, "src")

from ttesched import generator, io, pipeline, scheduler
from ttesched.errors import TtError


def build_instance(size, seed, rc, maxn, vls, rel_div):
    cfg = generator.GeneratorConfig(
        topology="mixed", endpoints=20, messages=size, seed=seed,
        receiver_continue=rc, max_doublings=maxn, virtual_links=vls,
        release_divisor=rel_div)
    topo = generator.generate_topology(cfg)
    msgs = generator.generate_messages(topo, cfg)
    vlinks = generator.generate_virtual_links(topo, cfg)
    return io.InstanceFile(
        topology=topo, messages=msgs,
        config=io.ConfigSection(integration_cycle_ns=cfg.resolved_ic()),
        virtual_links=vlinks)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 100, 200])
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--rc", type=float, default=0.78)
    ap.add_argument("--maxn", type=int, default=2)
    ap.add_argument("--reldiv", type=int, default=8)
    ap.add_argument("--starts", type=int, default=16)
    args = ap.parse_args()

    budget = scheduler.SolveBudget(max_starts=args.starts, backtrack_limit=256)
    print(f"rc={args.rc} maxn={args.maxn} reldiv={args.reldiv} starts={args.starts}")
    for size in args.sizes:
        utils, ratios, mk_rcs, po_rcs = [], [], [], []
        cs, lbs = [], []
        po_fail = 0
        t0 = time.time()
        vls = 10 if size >= 50 else 0
        for seed in range(args.count):
            inst = build_instance(size, 1000 * size + seed, args.rc, args.maxn,
                                  vls, args.reldiv)
            res = pipeline.run_pipeline(inst, seed=0, budget=budget)
            utils.append(res.assignment.max_load_ns / res.config.integration_cycle_ns)
            ratios.append(res.schedule.makespan_ns / res.schedule.lower_bound_ns)
            cs.append(res.schedule.makespan_ns)
            lbs.append(res.schedule.lower_bound_ns)
            assert res.validation.passed, f"makespan invalid size={size} seed={seed}"
            try:
                res_p = pipeline.run_pipeline(inst, objective="porosity", seed=0,
                                              budget=budget)
                assert res_p.validation.passed, f"porosity invalid {size}/{seed}"
                if res.rc_report is not None:
                    mk_rcs += [e.bound_ns for e in res.rc_report.entries]
                    po_rcs += [e.bound_ns for e in res_p.rc_report.entries]
            except TtError as exc:
                po_fail += 1
        line = (f"size={size:4d} util={statistics.mean(utils):.3f} "
                f"[{min(utils):.2f},{max(utils):.2f}] "
                f"ratio_mean={statistics.mean(ratios):.3f} "
                f"ratio_agg={sum(cs)/sum(lbs):.3f} max={max(ratios):.3f} "
                f"po_fail={po_fail}/{args.count}")
        if mk_rcs:
            line += (f" rc_ratio={statistics.mean(mk_rcs)/statistics.mean(po_rcs):.3f}")
        print(line + f" t={time.time()-t0:.0f}s")


if __name__ == "__main__":
    main()
