import numpy as np
import pytest

from scsolve.seq2seq import ModelConfig, Seq2Seq

TABLE1_STEM = ("— That T-shirt with Yao Ming's picture on it ____ belong to John. He likes him a lot. "
               "— No, it ____ be his. He hates black color.")
TABLE1_OPTIONS = ["can; can't", "may; needn't", "must; mustn't", "must; can't"]


@pytest.fixture
def table1_record():
    return {"id": "table1", "stem": TABLE1_STEM, "options": list(TABLE1_OPTIONS), "answer": 3}


@pytest.fixture
def tiny_config():
    return ModelConfig(d=8, enc_layers=1, dec_layers=1, heads=2, ffn=16, head_hidden=12,
                       vocab_size=20, max_len=8, seed=3, precision="f64")


@pytest.fixture
def tiny_model(tiny_config):
    model = Seq2Seq(tiny_config)
    rng = np.random.default_rng(11)
    # larger than the 0.02 init so every path carries signal for gradient checks
    for p in model.params.values():
        p.data[...] = rng.normal(0.0, 0.5, p.shape)
    return model
