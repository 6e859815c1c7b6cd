"""End-to-end smoke test of the python bindings on a Duffing oscillator."""
import math

import numpy as np

import _ssmred as ssm


def main():
    model = ssm.build_oscillator_chain(1, np.array([1.0]), np.array([0.5]),
                                       alpha=0.004, beta=0.0)
    assert model.n == 1
    assert model.proportional

    sp = ssm.compute_spectrum(model, 1)
    lam = sp.eigenvalues[0]
    assert abs(lam.real + 0.002) < 1e-12
    assert abs(lam.imag - math.sqrt(1.0 - 0.002**2)) < 1e-12

    x0 = ssm.modal_initial_condition(model, [(0, 0.4)])
    t, X = ssm.integrate(model, x0, 200.0, 0.05, 1e-11)
    assert X.shape == (2, len(t))

    rom = ssm.fit_rom(model, sp, [(t, X)], [0], order=3, h_order=5)
    assert rom.m == 1
    assert rom.conjugacy_residual < 1e-3

    # hardening backbone: omega grows with rho for a positive cubic spring
    bb = ssm.backbone(rom, model, 0.2, 20)
    assert bb[-1, 1] > bb[0, 1] > 1.0 - 1e-3

    # decay prediction against the full model
    x0t = ssm.modal_initial_condition(model, [(0, 0.38)])
    tt, XT = ssm.integrate(model, x0t, 150.0, 0.05, 1e-11)
    tp, XP = ssm.simulate_rom(rom, sp, model, XT[:, 0], 150.0, 0.05)
    err = ssm.nmte((tp, XP), (tt, XT))
    assert err < 5.0, f"decay NMTE {err}"

    # FRC sweep across the resonance
    frc = ssm.continue_frc(rom, sp, model, np.array([1.0]), 0.002, 0.95, 1.1)
    assert frc.shape[0] > 10
    assert frc[:, 1].max() > 0.1

    print("smoke ok: nmte=%.3f%%, frc points=%d" % (err, frc.shape[0]))


if __name__ == "__main__":
    main()
