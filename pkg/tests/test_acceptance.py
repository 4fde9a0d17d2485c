"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import io
import itertools
import time
from contextlib import redirect_stdout

import numpy as np

from parafrac import cli, empirical, thermo
from parafrac.maps1d import MPInverseBranch, SqrtMap, compose_eval
from parafrac.symbolic import delta_stopping, induced_alphabet, is_prefix_free

from .conftest import ACCEPTANCE, CONFIGS, bundled

LOG23 = np.log(2) / np.log(3)
BUNDLED = sorted(p.stem for p in CONFIGS.glob("*.json"))


def record(n, ok, detail, elapsed):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.2f} s)"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_criterion_1_middle_third_oracle(middle_third, half):
    t0 = time.perf_counter()
    errs = [abs(thermo.gamma_root(middle_third, half, q) - (1 - q) * LOG23) for q in (0.0, 0.5, 1.0, 2.0)]
    dt = time.perf_counter() - t0
    record(1, max(errs) <= 1e-6 and dt < 1.0, f"max |gamma - (1-q)log2/log3| = {max(errs):.2e}", dt)


def test_criterion_2_bedford_mcmullen_oracle(bedford_mcmullen, quarter):
    t0 = time.perf_counter()
    b0 = 1 + LOG23
    cases = [(0.0, b0, 1e-3), (1.0, 0.0, 1e-6), (2.0, -b0, 1e-2)]
    errs = [abs(thermo.beta_root(bedford_mcmullen, quarter, q) - want) for q, want, _ in cases]
    dt = time.perf_counter() - t0
    ok = all(e <= tol for e, (_, _, tol) in zip(errs, cases)) and dt < 30
    record(2, ok, "errors " + ", ".join(f"{e:.1e}" for e in errs), dt)


def _compare(config, deltas):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(["compare", str(CONFIGS / config), "--q", "0,1,2", "--tol", "0.05", "--delta", deltas])
    return code, buf.getvalue()


def test_criterion_3_compare_oracles():
    t0 = time.perf_counter()
    cantor = _compare("middle_third.json", ",".join(f"3^-{k}" for k in range(3, 8)))
    carpet = _compare("bedford_mcmullen.json", ",".join(f"3^-{k}" for k in range(4, 9)))
    dt = time.perf_counter() - t0
    ok = cantor[0] == 0 and carpet[0] == 0 and dt < 120
    record(3, ok, f"compare exit codes cantor={cantor[0]} carpet={carpet[0]}", dt)


def test_criterion_4_parabolic_cantor():
    system, measure = bundled("mp_cantor_09")
    t0 = time.perf_counter()
    res = thermo.solve_gamma(system, measure, 0.0, induced=30)
    q1 = [abs(thermo.gamma_root(system, measure, 1.0, induced=30, n=n)) for n in range(1, res.level + 1)]
    dt = time.perf_counter() - t0
    ok = abs(res.root - 1.0) <= 0.05 and max(q1) <= 1e-6 and dt < 120
    record(4, ok, f"gamma(0) = {res.root:.4f} at level {res.level}, max |gamma(1)| = {max(q1):.1e}", dt)


def test_criterion_5_parabolic_diagnostic(mp09, half):
    t0 = time.perf_counter()
    tr = empirical.local_exponent_trace(mp09, half, 0, [50, 100, 200, 400])
    dt = time.perf_counter() - t0
    ok = bool(np.all(np.diff(tr.exponents) > 0)) and tr.exponents[2] > 10 and dt < 1.0
    record(5, ok, "exponents " + ", ".join(f"{e:.2f}" for e in tr.exponents), dt)


def test_criterion_6_pressure_bounds():
    t0 = time.perf_counter()
    worst, failed = -np.inf, []
    for name in BUNDLED:
        system, measure = bundled(name)
        for entry in thermo.pressure_bound_checks(system, measure, qs=(0.0, 1.0, 2.0)):
            worst = max(worst, entry.value)
            if not entry.passed:
                failed.append(f"{name}@q={entry.q:g}")
    dt = time.perf_counter() - t0
    detail = f"{len(BUNDLED)} configs, largest bound value {worst:.4f}"
    record(6, not failed, detail + "".join(f" {f}" for f in failed), dt)


def test_criterion_7_invariants(middle_third, half):
    t0 = time.perf_counter()
    problems = []

    qs = np.arange(0.0, 3.01, 0.25)
    for system, measure, kw in [(middle_third, bundled("middle_third")[1], {}),
                                (*bundled("bedford_mcmullen"), {}),
                                (*bundled("mp_cantor_09"), {"induced": 20, "n": 3})]:
        curve = thermo.spectrum_curve(system, measure, qs=qs, **kw)
        if not (curve.is_monotone() and curve.is_convex()):
            problems.append(f"curve {system.name}")

    for name in ("mp_cantor_05", "mp_cantor_09"):
        system, measure = bundled(name)
        for q in (0.0, 2.0):
            roots = [thermo.gamma_root(system, measure, q, n=3, induced=N) for N in (5, 10, 20, 30)]
            if any(b < a - 1e-9 for a, b in zip(roots, roots[1:])):
                problems.append(f"sandwich {name} q={q:g}")

    maps = [MPInverseBranch(0.9, "left"), MPInverseBranch(0.9, "right"), MPInverseBranch(0.5, "left"), SqrtMap()]
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        word = [maps[int(i)] for i in rng.integers(0, len(maps), size=int(rng.integers(1, 9)))]
        x, h = float(rng.uniform(0.05, 0.95)), 1e-6
        fd = (compose_eval(word, x + h)[0] - compose_eval(word, x - h)[0]) / (2 * h)
        d = compose_eval(word, x)[1]
        worst = max(worst, abs(d - fd) / abs(d))
    if worst > 1e-5:
        problems.append(f"chain rule {worst:.1e}")

    for name, delta, kw in [("middle_third", 3.0 ** -6, {}), ("bedford_mcmullen", 3.0 ** -5, {}),
                            ("mp_cantor_09", 0.01, {"induced": 30}), ("fig1_right", 0.02, {})]:
        system, measure = bundled(name)
        st = delta_stopping(system, measure, delta, **kw)
        if abs(st.masses.sum() + st.truncated_mass - 1.0) > 1e-12 or not is_prefix_free(st.words):
            problems.append(f"stopping {name}")

    for k, n in itertools.product((2, 3), range(1, 7)):
        brute = {w for m in range(1, n + 1) for w in itertools.product(range(k), repeat=m)
                 if w[-1] == 0 and 0 not in w[:-1]}
        alpha = induced_alphabet(k, 0, n)
        if set(alpha.entries) != brute or not is_prefix_free(alpha.entries):
            problems.append(f"induced k={k} N={n}")

    dt = time.perf_counter() - t0
    record(7, not problems, "all invariant suites hold" if not problems else "; ".join(problems), dt)


def test_criterion_8_zeta_flags(middle_third, half, bedford_mcmullen, quarter):
    t0 = time.perf_counter()
    bad = []
    for system, measure, root in [(middle_third, half, thermo.gamma_root),
                                  (bedford_mcmullen, quarter, thermo.beta_root)]:
        for q in (0.0, 2.0):
            r = root(system, measure, q)
            above = thermo.zeta_partial(system, measure, r + 0.05, q, n_max=12).convergent
            below = thermo.zeta_partial(system, measure, r - 0.05, q, n_max=12).convergent
            if not above or below:
                bad.append(f"{system.name} q={q:g}")
    dt = time.perf_counter() - t0
    record(8, not bad, "flags flip at root +- 0.05" if not bad else " ".join(bad), dt)


def _csv(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main([str(a) for a in argv] + ["--seed", "11", "--threads", "1"])
    return code, buf.getvalue().encode()


def test_criterion_9_determinism():
    t0 = time.perf_counter()
    runs = [("spectrum", CONFIGS / "bedford_mcmullen.json", "--q", "0,0.5,2"),
            ("spectrum", CONFIGS / "mp_cantor_09.json", "--q", "0,2", "--level", "3"),
            ("moments", CONFIGS / "fig1_right.json", "--q", "0,2"),
            ("moments", CONFIGS / "middle_third.json", "--estimator", "chaos", "--samples", "100000")]
    same = all(_csv(*r) == _csv(*r) for r in runs)
    dt = time.perf_counter() - t0
    record(9, same, f"{len(runs)} commands byte-identical on repeat", dt)
