"""Hot numeric kernels for orbit iteration and Monte Carlo sweeps.

The same source builds two ways: JIT-compiled with numba (default) or as
plain Python/NumPy.  Set ``IETFLOW_NO_NUMBA=1`` to force the fallback;
``benchmarks/bench_kernels.py`` times both paths against each other.

Everything here is deterministic given its inputs: no kernel draws random
numbers, so each build path is bit-reproducible, and the two paths produce
identical trajectories (flow times built from log/exp may differ in the
final ulp because numba links a different libm).  Permutations are passed
as 0-based int64 arrays (``perm[i]`` = image of position i).

Convention used throughout (one Rauzy step of the induction):

* sign "+" means lambda_{pi^-1(m)} > lambda_m: operation a applies;
* sign "-" means lambda_m > lambda_{pi^-1(m)}: operation b applies;
* a Zorich step repeats one operation until the sign flips.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

BOUNDARY = -1  # tie lambda_m == lambda_{pi^-1(m)}: induction undefined
OVERFLOW = -2  # Zorich block exceeded the step cap

_STEP_CAP = 1 << 31

OBS_COORD = 0  # lambda_1 (flow kernels)
OBS_HEIGHT = 3  # h_1/(1+h_1), bounded height observable (flow kernels)


def numba_enabled() -> bool:
    flag = os.environ.get("IETFLOW_NO_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def build_kernels(use_jit: bool) -> SimpleNamespace:
    """Compile (or just collect) the kernel set; both paths share this source."""
    if use_jit:
        from numba import njit

        jit = njit(cache=False, nogil=True)
    else:
        def jit(f):
            return f

    @jit
    def _perm_inverse(perm, inv):
        for j in range(perm.shape[0]):
            inv[perm[j]] = j

    @jit
    def _rauzy_a(lam, perm, inv):
        # cut the last subinterval, reinsert after position pi^-1(m)
        m = lam.shape[0]
        p = inv[m - 1]
        lm = lam[m - 1]
        lam[p] -= lm
        for i in range(m - 1, p + 1, -1):
            lam[i] = lam[i - 1]
        lam[p + 1] = lm
        vm = perm[m - 1]
        for i in range(m - 1, p + 1, -1):
            perm[i] = perm[i - 1]
        perm[p + 1] = vm
        _perm_inverse(perm, inv)

    @jit
    def _rauzy_b(lam, perm, inv):
        m = lam.shape[0]
        p = inv[m - 1]
        lam[m - 1] -= lam[p]
        vm = perm[m - 1]
        for j in range(m):
            v = perm[j]
            if v > vm:
                if v < m - 1:
                    perm[j] = v + 1
                else:
                    perm[j] = vm + 1
        _perm_inverse(perm, inv)

    @jit
    def zorich_once(lam, perm, inv):
        """One Zorich step in place on a normalized state.

        Returns (op, nsteps, logtime): op is 0 for a / 1 for b, or a
        negative error code; logtime is the Teichmueller flow time of the
        block, -log of the total-length shrink factor.
        """
        m = lam.shape[0]
        d = lam[inv[m - 1]] - lam[m - 1]
        if d == 0.0:
            return BOUNDARY, 0, 0.0
        op = 0 if d > 0.0 else 1
        nsteps = 0
        while True:
            if op == 0:
                _rauzy_a(lam, perm, inv)
            else:
                _rauzy_b(lam, perm, inv)
            nsteps += 1
            if nsteps >= _STEP_CAP:
                return OVERFLOW, nsteps, 0.0
            d = lam[inv[m - 1]] - lam[m - 1]
            if d == 0.0:
                return BOUNDARY, nsteps, 0.0
            if (op == 0) != (d > 0.0):
                break
        total = 0.0
        for i in range(m):
            total += lam[i]
        logtime = -np.log(total)
        for i in range(m):
            lam[i] /= total
        return op, nsteps, logtime

    @jit
    def iet_orbit(breaks, jumps, x0, n):
        """Forward orbit (x, Tx, ..., T^{n-1}x) of a piecewise translation.

        breaks are the upper cell edges beta_1..beta_m, jumps the per-cell
        translation amounts.
        """
        m = breaks.shape[0]
        xs = np.empty(n, dtype=np.float64)
        x = x0
        for t in range(n):
            xs[t] = x
            i = 0
            while i < m - 1 and x >= breaks[i]:
                i += 1
            x += jumps[i]
        return xs

    @jit
    def invariant_hist(lam, perm, inv, burn_in, n, nbins):
        """Histogram of lambda_1 along the Zorich orbit (after burn-in).

        Returns (counts, completed, status); status < 0 reports an early
        stop (boundary tie), with `completed` steps accumulated.
        """
        counts = np.zeros(nbins, dtype=np.int64)
        for _ in range(burn_in):
            op, _, _ = zorich_once(lam, perm, inv)
            if op < 0:
                return counts, 0, op
        done = 0
        for _ in range(n):
            op, _, _ = zorich_once(lam, perm, inv)
            if op < 0:
                return counts, done, op
            b = int(lam[0] * nbins)
            if b >= nbins:
                b = nbins - 1
            counts[b] += 1
            done += 1
        return counts, done, 0

    @jit
    def min_coord_hist(lam, perm, inv, burn_in, n, edges):
        """Counts of min_i lambda_i falling below each edge (thin-simplex mass)."""
        k = edges.shape[0]
        counts = np.zeros(k, dtype=np.int64)
        m = lam.shape[0]
        for _ in range(burn_in):
            op, _, _ = zorich_once(lam, perm, inv)
            if op < 0:
                return counts, 0, op
        done = 0
        for _ in range(n):
            op, _, _ = zorich_once(lam, perm, inv)
            if op < 0:
                return counts, done, op
            mn = lam[0]
            for i in range(1, m):
                if lam[i] < mn:
                    mn = lam[i]
            for j in range(k):
                if mn < edges[j]:
                    counts[j] += 1
            done += 1
        return counts, done, 0

    @jit
    def orbit_coord_series(lam, perm, inv, burn_in, n, stride, i1, i2):
        """Two coordinate series sampled every `stride` Zorich steps on Delta^+.

        After burn-in the parity is fixed so every recorded state satisfies
        lambda_{pi^-1(m)} > lambda_m (the G^2 chain stays on one side).
        Observables are applied to the raw coordinates downstream.
        """
        m = lam.shape[0]
        s1 = np.empty(n, dtype=np.float64)
        s2 = np.empty(n, dtype=np.float64)
        for _ in range(burn_in):
            op, _, _ = zorich_once(lam, perm, inv)
            if op < 0:
                return s1, s2, 0, op
        if lam[inv[m - 1]] - lam[m - 1] < 0.0:
            op, _, _ = zorich_once(lam, perm, inv)
            if op < 0:
                return s1, s2, 0, op
        done = 0
        for t in range(n):
            s1[t] = lam[i1]
            s2[t] = lam[i2]
            done += 1
            for _ in range(stride):
                op, _, _ = zorich_once(lam, perm, inv)
                if op < 0:
                    return s1, s2, done, op
        return s1, s2, done, 0

    @jit
    def survival_scan(lam0s, perm0, burn_in, n_max, q_ops, q_ns, q_perms):
        """First hitting time of the cylinder of q along the squared chain.

        The squared accelerated map preserves each side of the partition,
        so after burn-in the parity is adjusted to the side the cylinder
        lives on (the side of its first letter).  For each start row the
        Zorich letter stream is generated and the least k in [0, n_max]
        with letters 2k..2k+|q|-1 spelling q (ops, counts and starting
        permutations all match) is recorded, together with the accumulated
        flow time to the hit; hit index -1 means no visit within n_max.
        """
        n_starts, m = lam0s.shape
        lq = q_ops.shape[0]
        hits = np.full(n_starts, -1, dtype=np.int64)
        flow_t = np.zeros(n_starts, dtype=np.float64)
        status = np.zeros(n_starts, dtype=np.int64)
        lam = np.empty(m, dtype=np.float64)
        perm = np.empty(m, dtype=np.int64)
        inv = np.empty(m, dtype=np.int64)
        ring_op = np.empty(lq, dtype=np.int64)
        ring_n = np.empty(lq, dtype=np.int64)
        ring_perm = np.empty((lq, m), dtype=np.int64)
        for s in range(n_starts):
            for i in range(m):
                lam[i] = lam0s[s, i]
                perm[i] = perm0[i]
            _perm_inverse(perm, inv)
            ok = True
            for _ in range(burn_in):
                op, _, _ = zorich_once(lam, perm, inv)
                if op < 0:
                    status[s] = op
                    ok = False
                    break
            if ok:
                # parity fix: land on the cylinder's side of the partition
                d = lam[inv[m - 1]] - lam[m - 1]
                on_plus = d > 0.0
                want_plus = q_ops[0] == 0
                if on_plus != want_plus:
                    op, _, _ = zorich_once(lam, perm, inv)
                    if op < 0:
                        status[s] = op
                        ok = False
            if not ok:
                continue
            t_acc = 0.0
            n_letters = 2 * n_max + lq
            for j in range(n_letters):
                slot = j % lq
                for i in range(m):
                    ring_perm[slot, i] = perm[i]
                op, nst, lt = zorich_once(lam, perm, inv)
                if op < 0:
                    status[s] = op
                    break
                ring_op[slot] = op
                ring_n[slot] = nst
                t_acc += lt
                if j >= lq - 1 and (j - (lq - 1)) % 2 == 0:
                    k = (j - lq + 1) // 2
                    if k > n_max:
                        break
                    match = True
                    for r in range(lq):
                        slot_r = (j - lq + 1 + r) % lq
                        if ring_op[slot_r] != q_ops[r] or ring_n[slot_r] != q_ns[r]:
                            match = False
                            break
                        for i in range(m):
                            if ring_perm[slot_r, i] != q_perms[r, i]:
                                match = False
                                break
                        if not match:
                            break
                    if match:
                        hits[s] = k
                        flow_t[s] = t_acc
                        break
        return hits, flow_t, status

    @jit
    def _flow_piece(lam1, h1, s, obs_code):
        # integral of the observable along the dilation flow for time s,
        # started at a section point; lambda_1 grows e^t, h_1 shrinks e^-t.
        # raw h_1 is not square-integrable, so the height observable is the
        # bounded h_1/(1+h_1), whose integral is log((1+h1)/(1+h1 e^-s))
        if obs_code == OBS_HEIGHT:
            return np.log((1.0 + h1) / (1.0 + h1 * np.exp(-s)))
        return lam1 * (np.exp(s) - 1.0)

    @jit
    def clt_flow_integrals(lam0s, h0s, perm0, burn_in, horizon, obs_code):
        """Integral of the observable over flow time `horizon` per start.

        The suspension is iterated one Rauzy return at a time; each return
        contributes its closed-form integral and the final partial interval
        is evaluated analytically as well.
        """
        n_starts, m = lam0s.shape
        vals = np.empty(n_starts, dtype=np.float64)
        status = np.zeros(n_starts, dtype=np.int64)
        lam = np.empty(m, dtype=np.float64)
        h = np.empty(m, dtype=np.float64)
        hnew = np.empty(m, dtype=np.float64)
        perm = np.empty(m, dtype=np.int64)
        inv = np.empty(m, dtype=np.int64)
        for sidx in range(n_starts):
            for i in range(m):
                lam[i] = lam0s[sidx, i]
                h[i] = h0s[sidx, i]
                perm[i] = perm0[i]
            _perm_inverse(perm, inv)
            acc = 0.0
            tcur = 0.0
            vals[sidx] = 0.0
            steps = 0
            while True:
                p = inv[m - 1]
                d = lam[p] - lam[m - 1]
                if d == 0.0:
                    status[sidx] = BOUNDARY
                    break
                mn = lam[m - 1] if d > 0.0 else lam[p]
                shrink = 1.0 - mn  # total length after the cut; roof = -log
                tau = -np.log(shrink)
                if steps >= burn_in:
                    if tcur + tau >= horizon:
                        acc += _flow_piece(lam[0], h[0], horizon - tcur, obs_code)
                        vals[sidx] = acc
                        break
                    acc += _flow_piece(lam[0], h[0], tau, obs_code)
                    tcur += tau
                # height transport: h' = A^t h, then flow rescale by shrink
                if d > 0.0:
                    # case a: insert h_p + h_m after position p
                    for i in range(p + 1):
                        hnew[i] = h[i]
                    hnew[p + 1] = h[p] + h[m - 1]
                    for i in range(p + 2, m):
                        hnew[i] = h[i - 1]
                    for i in range(m):
                        h[i] = hnew[i] * shrink
                    _rauzy_a(lam, perm, inv)
                else:
                    for i in range(m):
                        hnew[i] = h[i]
                    hnew[p] = h[p] + h[m - 1]
                    for i in range(m):
                        h[i] = hnew[i] * shrink
                    _rauzy_b(lam, perm, inv)
                total = 0.0
                for i in range(m):
                    total += lam[i]
                for i in range(m):
                    lam[i] /= total
                steps += 1
                if steps >= _STEP_CAP:
                    status[sidx] = OVERFLOW
                    break
        return vals, status

    @jit
    def flow_observable_mean(lam0, h0, perm0, burn_in, n_returns, obs_code):
        """Time average of the observable along the flow: (sum integrals, total time)."""
        m = lam0.shape[0]
        lam = lam0.copy()
        h = h0.copy()
        perm = perm0.copy()
        inv = np.empty(m, dtype=np.int64)
        _perm_inverse(perm, inv)
        hnew = np.empty(m, dtype=np.float64)
        acc = 0.0
        tacc = 0.0
        for step in range(burn_in + n_returns):
            p = inv[m - 1]
            d = lam[p] - lam[m - 1]
            if d == 0.0:
                return acc, tacc, BOUNDARY
            mn = lam[m - 1] if d > 0.0 else lam[p]
            shrink = 1.0 - mn
            tau = -np.log(shrink)
            if step >= burn_in:
                acc += _flow_piece(lam[0], h[0], tau, obs_code)
                tacc += tau
            if d > 0.0:
                for i in range(p + 1):
                    hnew[i] = h[i]
                hnew[p + 1] = h[p] + h[m - 1]
                for i in range(p + 2, m):
                    hnew[i] = h[i - 1]
                for i in range(m):
                    h[i] = hnew[i] * shrink
                _rauzy_a(lam, perm, inv)
            else:
                for i in range(m):
                    hnew[i] = h[i]
                hnew[p] = h[p] + h[m - 1]
                for i in range(m):
                    h[i] = hnew[i] * shrink
                _rauzy_b(lam, perm, inv)
            total = 0.0
            for i in range(m):
                total += lam[i]
            for i in range(m):
                lam[i] /= total
        return acc, tacc, 0

    ns = SimpleNamespace(
        jit_enabled=use_jit,
        zorich_once=zorich_once,
        iet_orbit=iet_orbit,
        invariant_hist=invariant_hist,
        min_coord_hist=min_coord_hist,
        orbit_coord_series=orbit_coord_series,
        survival_scan=survival_scan,
        clt_flow_integrals=clt_flow_integrals,
        flow_observable_mean=flow_observable_mean,
    )
    return ns


def perm_array(perm) -> np.ndarray:
    """One-line tuple (1-based values) -> 0-based int64 image array."""
    return np.array([v - 1 for v in perm], dtype=np.int64)


def perm_tuple(arr) -> tuple:
    return tuple(int(v) + 1 for v in arr)


kernels = build_kernels(numba_enabled())
