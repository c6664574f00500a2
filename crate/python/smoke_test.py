#!/usr/bin/env python3
"""Smoke test for the qlinsolve Python extension module.

Locates the compiled cdylib under target/, imports it as `qlinsolve`, and
exercises the instance type, the three solvers, and the analysis helpers.
Exits nonzero on the first failure.

Build the module first:

    cargo build -p qlinsolve-py --release
    python3 python/smoke_test.py
"""

import json
import shutil
import sys
import sysconfig
import tempfile
from fractions import Fraction
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

CHECKS = []


def check(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"{status}: {name}" + (f" — {detail}" if detail else ""))
    CHECKS.append(ok)


def locate_cdylib():
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libqlinsolve_py.so", "libqlinsolve_py.dylib", "qlinsolve_py.dll")
    ]
    for path in candidates:
        if path.exists():
            return path
    sys.exit(
        "no compiled module found; run `cargo build -p qlinsolve-py --release` first"
    )


def import_module():
    src = locate_cdylib()
    ext = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    tmp = Path(tempfile.mkdtemp(prefix="qlinsolve-smoke-"))
    dst = tmp / f"qlinsolve{ext}"
    shutil.copy2(src, dst)
    sys.path.insert(0, str(tmp))
    import qlinsolve  # noqa: E402

    print(f"loaded {src} as {dst.name}")
    return qlinsolve


def main():
    q = import_module()

    # --- instance round trip -------------------------------------------------
    sys2 = q.LinearSystem.generate(2, 8, mode="modular", seed=42)
    check(
        "generated instance shape",
        sys2.n == 2 and sys2.m == 8 and sys2.mode == "modular",
        repr(sys2),
    )
    planted = sys2.planted_solution
    check("planted point satisfies all rows", sys2.is_solution(planted), str(planted))
    round_trip = q.LinearSystem.from_json(sys2.to_json())
    check(
        "JSON round trip preserves the system",
        round_trip.a == sys2.a
        and round_trip.b == sys2.b
        and round_trip.planted_solution == planted,
    )

    # --- solvers agree --------------------------------------------------------
    stats = q.solve_dimred(sys2, seed=7, stage_mode="oracle", max_retries=10)
    check(
        "staged solver recovers the planted solution",
        stats["residual_ok"] and stats["final_point"] == planted,
        f"final_point={stats['final_point']}",
    )
    check(
        "stage spaces shrink geometrically",
        [s["space_size"] for s in stats["stages"]] == [64, 8],
        str([s["space_size"] for s in stats["stages"]]),
    )
    naive = q.solve_naive(sys2, seed=7)
    check(
        "one-shot solver agrees",
        naive["residual_ok"] and naive["final_point"] == planted,
    )
    classical = q.solve_classical(sys2)
    check("exact elimination agrees", classical == planted, str(classical))

    exact = q.LinearSystem.generate(2, 16, mode="exact", seed=3)
    check(
        "exact-mode solvers agree",
        q.solve_classical(exact) == exact.planted_solution
        and q.solve_dimred(exact, seed=1, stage_mode="oracle", max_retries=10)["final_point"]
        == exact.planted_solution,
    )

    # --- brute force cross-check ---------------------------------------------
    partial = sys2.brute_force_solutions(1)
    check(
        "one satisfied row leaves M^(n-1) candidates",
        len(partial) == 8 and planted in partial,
        f"{len(partial)} candidates",
    )

    # --- analysis constants ---------------------------------------------------
    check(
        "per-stage iteration constant at M=2^32",
        q.stage_iterations(2**32) == 51471,
        str(q.stage_iterations(2**32)),
    )
    check(
        "cost model at n=1, M=2^32",
        q.quantum_cost(1, 2**32) == 102944 and q.classical_cost(322) == 322**3,
    )
    x = q.crossover(2**32)
    check("crossover within the expected window", 320 <= x <= 323, str(x))

    bound = q.success_bound(2**28, 2**32)
    check(
        "large-system success floor is 14/15",
        Fraction(bound["bound_numer"], bound["bound_denom"]) == Fraction(14, 15)
        and bound["bound"] >= 0.93,
        f"{bound['bound_numer']}/{bound['bound_denom']} = {bound['bound']:.5f}",
    )

    check("binomial bound spot checks", all(q.lemma1_check(n, k) for n in (2, 17, 60) for k in range(1, n + 1)))
    lhs, rhs, holds = q.lemma2_check(0.001, 100)
    check("product bound holds at p=0.001, n=100", holds and lhs > rhs, f"{lhs:.6f} > {rhs:.6f}")

    # --- Monte Carlo ----------------------------------------------------------
    # Exact no-retry expectation: each stage amplifies a 1/M fraction with
    # k = floor(pi/4 sqrt(M)) rounds, so success is the closed form per stage,
    # and the coarse floor (1 - 1/M)^n sits below it.
    import math

    k = math.floor(math.pi / 4 * math.sqrt(8))
    theta = math.asin(math.sqrt(1 / 8))
    per_stage = math.sin((2 * k + 1) * theta) ** 2
    expected = per_stage**2  # two stages
    floor_model = (1 - 1 / 8) ** 2
    mc = q.success_rate(sys2, runs=400, seed=1, max_retries=0)
    check(
        "no-retry success rate tracks the closed form",
        abs(mc["rate"] - expected) < 4 * mc["std_error"] + 0.01
        and mc["rate"] >= floor_model - 4 * mc["std_error"],
        f"rate={mc['rate']:.4f}, expected={expected:.4f}, floor={floor_model:.4f}, "
        f"se={mc['std_error']:.4f}",
    )
    mc_again = q.success_rate(sys2, runs=400, seed=1, max_retries=0)
    check("Monte Carlo is deterministic per seed", mc == mc_again)

    # --- guard surfaces as a Python exception ---------------------------------
    try:
        big = q.LinearSystem.generate(2, 2**30, mode="modular", seed=0)
        q.solve_dimred(big, seed=0)
        check("guard rejects oversized grids", False, "no exception raised")
    except ValueError as e:
        check("guard rejects oversized grids", "too large" in str(e), str(e))

    failures = CHECKS.count(False)
    print(f"smoke test: {len(CHECKS)} checks, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
