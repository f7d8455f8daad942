from collections import namedtuple

import numpy as np
import pytest

from core import PhonemeInventory

PlantedUtterance = namedtuple("PlantedUtterance", "utterance_id symbols data truth")

# per-state means of the second feature column; the first column is energy
STATE_MEANS = {"AH": (0.0, 8.0, 16.0), "S": (24.0, 32.0, 40.0)}
TRANSCRIPTS = (("AH", "S"), ("S", "AH"), ("AH", "S", "AH"))


@pytest.fixture
def inv():
    return PhonemeInventory.arpabet()


@pytest.fixture
def planted(inv):
    """Factory for corpora sampled from a known 3-state-per-phoneme HMM.

    ``truth`` holds (phoneme id, state) per frame.
    """

    def make(utterances=12, seed=0, min_run=3, max_run=9):
        gen = np.random.default_rng(seed)
        out = []
        for i in range(utterances):
            symbols = TRANSCRIPTS[i % len(TRANSCRIPTS)]
            rows, truth = [], []
            for sym in symbols:
                for k, mu in enumerate(STATE_MEANS[sym]):
                    n = int(gen.integers(min_run, max_run))
                    rows.append(np.column_stack([gen.normal(0.0, 1.0, n), gen.normal(mu, 1.0, n)]))
                    truth.extend([(inv.id_of(sym), k)] * n)
            out.append(PlantedUtterance(f"utt{i:03d}", symbols, np.vstack(rows), truth))
        return out

    return make
