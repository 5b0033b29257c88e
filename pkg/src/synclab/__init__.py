"""Bit-true simulation lab for L-DACS1 OFDM preamble synchronization.

The package splits into a floating-point reference chain and a fixed-point
hardware mirror that share one preamble template and one trial harness:

* :mod:`synclab.numerics` fixed-point formats, rounding, CORDIC
* :mod:`synclab.preamble` preamble synthesis and the energy template
* :mod:`synclab.channel` impairments: CFO, AWGN, multipath, DME pulses
* :mod:`synclab.metrics` floating-point correlation metrics
* :mod:`synclab.datapath` bit-true fixed-point datapath
* :mod:`synclab.estimator` detection plus timing/frequency estimation
* :mod:`synclab.harness` Monte Carlo trials and sweeps
* :mod:`synclab.report` figure rendering for sweep and trace output
* :mod:`synclab.cli` the ``sync-lab`` command line
"""

__version__ = "0.1.0"

from .channel import ChannelConfig, build_trial_stream, scenario_config
from .datapath import WordLengthConfig, run_datapath
from .estimator import SyncConfig, SyncResult, synchronize
from .harness import TrialStats, run_trials, sweep
from .preamble import PhyParams, PreambleTemplate, default_template, generate_preamble

__all__ = [
    "ChannelConfig",
    "PhyParams",
    "PreambleTemplate",
    "SyncConfig",
    "SyncResult",
    "TrialStats",
    "WordLengthConfig",
    "build_trial_stream",
    "default_template",
    "generate_preamble",
    "run_datapath",
    "run_trials",
    "scenario_config",
    "sweep",
    "synchronize",
    "__version__",
]
