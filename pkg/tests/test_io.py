import json

import numpy as np
import pytest

from relent import io as rio
from relent.io import FormatError, RunConfig
from relent.povm import informationally_complete_lo, random_lo_povm
from relent.states import bell_phi_plus


def test_povm_round_trip(tmp_path):
    povm = random_lo_povm((2, 2), 2, seed=0)
    path = tmp_path / "m.json"
    rio.emit_povm(povm, str(path), metadata={"role": "demo"})
    back = rio.parse_povm(str(path))
    assert back.class_tag == "lo" and back.dims == (2, 2)
    for a, b in zip(povm.effects, back.effects):
        assert np.max(np.abs(a - b)) < 1e-15
    # second emission of the parsed object is byte-identical
    path2 = tmp_path / "m2.json"
    rio.emit_povm(back, str(path2), metadata={"role": "demo"})
    assert path.read_bytes() == path2.read_bytes()


def test_parse_povm_rejects_wrong_tag(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"format": "relent-state", "dims": [2], "effects": []}))
    with pytest.raises(FormatError):
        rio.parse_povm(str(path))


def test_parse_state_rejects_dimension_mismatch(tmp_path):
    path = tmp_path / "s.json"
    rio.emit_state(bell_phi_plus(), str(path))
    doc = json.loads(path.read_text())
    doc["dims"] = [2, 3]
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatError):
        rio.parse_state(str(path))


def test_run_config_rejects_unknown_and_nonpositive():
    with pytest.raises(FormatError):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(FormatError):
        RunConfig.from_dict({"fw_max_iters": 0})
    with pytest.raises(FormatError):
        RunConfig.from_dict({"set_kind": "nope"})
    cfg = RunConfig.from_dict({"rounds": 3, "seed": 42})
    assert cfg.rounds == 3 and cfg.seed == 42
    assert cfg.measurement_spec().class_tag == cfg.measurement_class


def test_f17_round_trips_doubles(tmp_path):
    path = tmp_path / "s.json"
    rio.emit_state(bell_phi_plus(), str(path))
    state, _, _ = rio.parse_state(str(path))
    assert np.array_equal(state.mat, bell_phi_plus().mat)


def test_emit_povm_keeps_structure(tmp_path):
    povm = informationally_complete_lo((2, 2), seed=1)
    path = tmp_path / "ic.json"
    rio.emit_povm(povm, str(path))
    back = rio.parse_povm(str(path))
    assert back.structure is not None and back.structure["kind"] == "lo"
