import numpy as np
import pytest

from synclab.channel import build_trial_stream, scenario_config
from synclab.datapath import WordLengthConfig
from synclab.preamble import PhyParams, default_template


@pytest.fixture(scope="session")
def params():
    return PhyParams()


@pytest.fixture(scope="session")
def template(params):
    return default_template(params)


@pytest.fixture(scope="session")
def word_cfg():
    return WordLengthConfig()


@pytest.fixture(scope="session")
def clean_trial(params, template):
    """Builder for noiseless AWGN-off trials: (stream, true_sto)."""

    def build(cfo=0.0, seed=3):
        cfg = scenario_config("awgn", snr_db=float("inf"), cfo=cfo)
        return build_trial_stream(template, cfg, params, seed)

    return build


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
