import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spthe_cl.gain_laws import GainLaw, contract, dilate
from spthe_cl.hybrid import IntegrateOptions, Termination, integrate
from spthe_cl.switching import (
    AutomatonParams,
    PolicyInfeasible,
    RandomPolicy,
    ScriptedPolicy,
    SwitchingSignal,
    automaton_hds,
    generate_switching,
    signal_from_arc,
    verify_daat,
    verify_dadt,
)

PARAMS = AutomatonParams(tau_d=2.0, tau_a=25.0, n0=2.0, t0=1.0, modes=(1, 2, 3, 4), uninformative={3, 4})
PT = GainLaw(math.inf, 8.0)
HE = GainLaw(1.0, 8.0)
S_MAX_PT = dilate(PT, 1.0, 7.92)
S_MAX_HE = dilate(HE, 1.0, 8.0)


def classical_adt_ok(s, tau_d, n0, tol=0.0):
    # brute force over every pair of jump instants (a <= b)
    for a in range(len(s)):
        for b in range(a, len(s)):
            if b - a + 1 > (s[b] - s[a]) / tau_d + n0 + tol:
                return False
    return True


def classical_aat_ok(s, modes, s_end, bad, tau_a, t0, tol=0.0):
    # brute force: activation over every interval between breakpoints
    pts = [0.0, *s, s_end]
    for x in range(len(pts)):
        for y in range(x, len(pts)):
            act = sum(pts[k + 1] - pts[k] for k in range(x, y) if modes[k] in bad)
            if act > (pts[y] - pts[x]) / tau_a + t0 + tol:
                return False
    return True


def both(sig, law, params=PARAMS):
    return (verify_dadt(sig, law, 1.0, params.tau_d, params.n0),
            verify_daat(sig, law, 1.0, params.tau_a, params.t0, params.uninformative))


def test_scripted_alternation_passes():
    sig = generate_switching(PARAMS, PT, 1.0, ScriptedPolicy(((3.0, 2), (0.5, 3))), S_MAX_PT)
    dadt, daat = both(sig, PT)
    assert dadt.ok and daat.ok
    assert dadt.worst_margin >= 0 and daat.worst_margin >= 0
    assert sig.modes[:4] == [2, 3, 2, 3]
    # the oracle: each IR visit of 0.5 fits in 3.5 / 25 + 1
    assert 0.5 <= 3.5 / 25 + 1


def test_single_mode_forever():
    sig = generate_switching(PARAMS, PT, 1.0, ScriptedPolicy(((5.0, 1),)), S_MAX_PT)
    assert sig.jumps == () and sig.initial_mode == 1
    dadt, daat = both(sig, PT)
    assert dadt.worst_margin == 2.0 and daat.worst_margin == 1.0


def test_random_policy_deterministic():
    a = generate_switching(PARAMS, PT, 1.0, RandomPolicy(0.5, 3.0, seed=11), S_MAX_PT)
    b = generate_switching(PARAMS, PT, 1.0, RandomPolicy(0.5, 3.0, seed=11), S_MAX_PT)
    c = generate_switching(PARAMS, PT, 1.0, RandomPolicy(0.5, 3.0, seed=12), S_MAX_PT)
    assert a == b
    assert a != c


def test_real_times_are_contracted():
    sig = generate_switching(PARAMS, PT, 1.0, RandomPolicy(0.5, 3.0, seed=1), S_MAX_PT)
    for (t, _), s in zip(sig.jumps, sig.dilated):
        assert t == pytest.approx(8 - 8 * math.exp(-s / 8), abs=1e-12)
        assert t == pytest.approx(contract(PT, 1.0, s))


@pytest.mark.parametrize("law, s_max", [(PT, S_MAX_PT), (HE, S_MAX_HE)])
def test_generator_verifier_closure(law, s_max):
    for seed in range(50):
        for pol in (RandomPolicy(0.5, 3.0, seed=seed),
                    RandomPolicy(0.0, 0.4, seed=seed, weights={1: 1, 2: 1, 3: 4, 4: 4})):
            sig = generate_switching(PARAMS, law, 1.0, pol, s_max)
            dadt, daat = both(sig, law)
            # exact, not merely within the verification tolerance
            assert dadt.worst_margin >= 0.0, (seed, dadt)
            assert daat.worst_margin >= 0.0, (seed, daat)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), lo=st.floats(0.0, 2.0), width=st.floats(0.0, 3.0))
def test_time_scale_consistency(seed, lo, width):
    sig = generate_switching(PARAMS, PT, 1.0, RandomPolicy(lo, lo + width, seed=seed), S_MAX_PT)
    s = list(sig.dilated)
    classical = (classical_adt_ok(s, 2.0, 2.0, tol=1e-9)
                 and classical_aat_ok(s, sig.modes, S_MAX_PT, {3, 4}, 25.0, 1.0, tol=1e-9))
    dadt, daat = both(sig, PT)
    assert classical == (dadt.ok and daat.ok) == True  # noqa: E712


def test_dadt_burst_violation():
    t = 3.0
    sig = SwitchingSignal(1, ((t, 2), (t, 1), (t, 2), (t, 1)), 7.0)
    rep = verify_dadt(sig, PT, 1.0, 2.0, 2.0)
    assert not rep.ok
    assert rep.worst_margin == pytest.approx(-2.0)
    assert rep.witness == ((t, 0), (t, 4))
    assert "VIOLATED" in str(rep)


def test_zero_jumps_dadt():
    rep = verify_dadt(SwitchingSignal(1, (), 7.0), PT, 1.0, 2.0, 2.0)
    assert rep.ok and rep.worst_margin == 2.0 and rep.witness is None


@pytest.mark.parametrize("bad_mode", [3, 4])
def test_daat_overstay_violation(bad_mode):
    # stay in the uninformative mode for dilated time 2: activation 2 > 2/25 + 1
    s_exit = 2.0
    t_exit = contract(PT, 1.0, s_exit)
    sig = SwitchingSignal(1, ((0.5, bad_mode), (t_exit, 1)), 7.0)
    s_enter = dilate(PT, 1.0, 0.5)
    rep = verify_daat(sig, PT, 1.0, 25.0, 1.0, {3, 4})
    assert not rep.ok
    expected = 1.0 - ((s_exit - s_enter) - (s_exit - s_enter) / 25.0)
    assert rep.worst_margin == pytest.approx(expected, rel=1e-9)
    (t1, j1), (t2, j2) = rep.witness
    assert (t1, j1) == (pytest.approx(0.5), 1)
    assert (t2, j2) == (pytest.approx(t_exit), 1)


def test_all_time_in_ir():
    sig = SwitchingSignal(3, (), 7.0)
    rep = verify_daat(sig, PT, 1.0, 25.0, 1.0, {3, 4})
    s_end = dilate(PT, 1.0, 7.0)
    assert not rep.ok
    assert rep.worst_margin == pytest.approx(1.0 - s_end * (1 - 1 / 25), rel=1e-12)
    never = verify_daat(SwitchingSignal(1, ((1.0, 2),), 7.0), PT, 1.0, 25.0, 1.0, {3, 4})
    assert never.ok and never.worst_margin == 1.0


def test_jump_after_blow_up_rejected():
    with pytest.raises(ValueError):
        verify_dadt(SwitchingSignal(1, ((8.5, 2),), 9.0), PT, 1.0, 2.0, 2.0)


def test_signal_validation():
    with pytest.raises(ValueError):
        SwitchingSignal(1, ((2.0, 2), (1.0, 1)), 5.0)
    with pytest.raises(ValueError):
        SwitchingSignal(1, ((1.0, 1),), 5.0)
    with pytest.raises(ValueError):
        SwitchingSignal(1, ((6.0, 2),), 5.0)
    sig = SwitchingSignal(1, ((1.0, 2), (2.0, 3)), 5.0)
    assert sig.mode_at(0.5) == 1 and sig.mode_at(1.5) == 2 and sig.mode_at(4.0) == 3
    assert sig.mode_at(1.0, j=0) == 1


def test_scripted_infeasible():
    # 2 dilated units in an IR mode drain 2 * 0.96 > T0
    with pytest.raises(PolicyInfeasible):
        generate_switching(PARAMS, PT, 1.0, ScriptedPolicy(((1.0, 1), (2.0, 3))), S_MAX_PT)
    with pytest.raises(PolicyInfeasible):
        generate_switching(PARAMS, PT, 1.0, ScriptedPolicy(((2.0, 3), (1.0, 1))), S_MAX_PT)
    with pytest.raises(ValueError):
        generate_switching(PARAMS, PT, 1.0, ScriptedPolicy(((1.0, 7),)), S_MAX_PT)


def test_automaton_two_immediate_jumps():
    sched = SwitchingSignal(1, ((0.0, 2), (0.0, 1)), 1.0, (0.0, 0.0), 1.0)
    sys = automaton_hds(PARAMS, sched, PT, dilated=True)
    arc = integrate(sys, [1.0, 2.0, 1.0, 1.0], IntegrateOptions(dt=1e-2, t_max=1.0))
    assert arc.jump_count == 2
    assert arc.t[1] == 0.0 and arc.t[2] == 0.0
    assert arc.x[2, 1] == pytest.approx(0.0)


def test_automaton_dead_solution():
    # IR mode, empty activation budget, rho_d < 1: no flow, no jump
    sched = SwitchingSignal(3, ((0.5, 1),), 5.0, (0.5,), 5.0)
    sys = automaton_hds(PARAMS, sched, PT, dilated=True)
    arc = integrate(sys, [3.0, 0.2, 0.05, 1.0], IntegrateOptions(dt=1e-2, t_max=5.0))
    assert arc.termination == Termination.DEAD
    assert arc.t[-1] < 5.0
    assert arc.t[-1] == pytest.approx(0.05 / 0.96, abs=1e-8)


@pytest.mark.parametrize("dilated", [True, False])
def test_automaton_verifier_closure(dilated):
    law = PT
    for seed in range(3):
        sched = generate_switching(PARAMS, law, 1.0, RandomPolicy(0.3, 2.0, seed=seed), S_MAX_PT)
        sys = automaton_hds(PARAMS, sched, law, dilated=dilated)
        end = S_MAX_PT if dilated else 7.92
        arc = integrate(sys, [sched.initial_mode, 2.0, 1.0, 1.0], IntegrateOptions(dt=5e-3 if dilated else 5e-4,
                                                                                   t_max=end))
        assert arc.termination == Termination.HORIZON
        assert arc.jump_count == len(sched.jumps)
        if dilated:
            real = np.array([contract(law, 1.0, s) for s in arc.t])
            arc = type(arc)(real, arc.j, arc.x, arc.termination, arc.labels)
        sig = signal_from_arc(arc, "q")
        dadt, daat = both(sig, law)
        assert dadt.ok and daat.ok
        np.testing.assert_allclose(sig.times, sched.times, atol=1e-6)


def test_params_validation():
    with pytest.raises(ValueError):
        AutomatonParams(0.0, 25.0, 2.0, 1.0, (1,))
    with pytest.raises(ValueError):
        AutomatonParams(2.0, 1.0, 2.0, 1.0, (1,))
    with pytest.raises(ValueError):
        AutomatonParams(2.0, 25.0, 0.5, 1.0, (1,))
    with pytest.raises(ValueError):
        AutomatonParams(2.0, 25.0, 2.0, 1.0, (1,), {5})
