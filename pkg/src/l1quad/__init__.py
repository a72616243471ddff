"""Quadrotor SE(3) tracking control with an L1 adaptive augmentation.

Library layout:

* ``geometry``   -- SO(3) primitives (hat/vee, exp map, Euler, drift repair)
* ``trajectory`` -- flat-output references (hover, figure-8, tilted figure-8)
* ``plant``      -- uncertain rigid-body dynamics and the RK4 integrator
* ``controller`` -- baseline geometric tracking controller
* ``l1``         -- L1 augmentation (predictor, adaptation law, low-pass filter)
* ``scenarios``  -- declarative experiment configs, built-in catalog, file parser
* ``harness``    -- simulation loop, metrics, comparison suites, CSV logging
* ``report``     -- matplotlib figures rendered next to the CSV output
* ``cli``        -- the ``sim`` command (run / compare / list)
"""

__version__ = "0.1.0"
