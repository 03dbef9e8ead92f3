import pytest

from fsmtrap.specio import (
    FormatError,
    design_text,
    ground_truth_text,
    parse_design,
    parse_ground_truth,
)
from fsmtrap.synth import GroundTruth, synthesize

DOC = """\
fsm main
  states S0 S1 S2
  inputs a b
  encoding binary
  reset S0
  transition S0 -> S1 when a=1
  transition S0 -> S2 when a=0 b=1
  transition S1 -> S0 when b=1
  moore S0 10
  moore S1 01
  moore S2 00
end
datapath
  counter c width 3 up enable out0
  reg acc width 4 update xor(acc, and(acc, pin(x)))
  reg sum width 4 update add(sum, pin(y))
  reg sh width 4 update load(shl(sh, 1))
  wire w0 reg acc 0
  wire w1 fsm_out 1
end
"""


def test_design_round_trip():
    fsm, dp = parse_design(DOC)
    assert fsm.states == ("S0", "S1", "S2")
    assert len(dp.counters) == 1 and dp.counters[0].enable == "out0"
    assert len(dp.data_regs) == 3
    text = design_text(fsm, dp)
    fsm2, dp2 = parse_design(text)
    assert fsm2 == fsm
    assert dp2 == dp
    assert design_text(fsm2, dp2) == text


def test_design_synthesizes():
    fsm, dp = parse_design(DOC)
    nl, gt = synthesize(fsm, dp)
    assert len(gt.sffs) == 2
    assert set(gt.counter_dict()) == {"c"}
    assert set(gt.data_dict()) == {"acc", "sum", "sh"}


def test_replicated_counter_round_trips():
    fsm, dp = parse_design(DOC)
    from fsmtrap.obfuscate import replicate_counter

    dp2 = replicate_counter(dp, "c", 2)
    text = design_text(fsm, dp2)
    assert "replicas 2" in text
    _, dp3 = parse_design(text)
    assert dp3 == dp2


def test_bad_expression_rejected():
    bad = DOC.replace("xor(acc, and(acc, pin(x)))", "frob(acc)")
    with pytest.raises(FormatError):
        parse_design(bad)


def test_missing_reset_rejected():
    bad = DOC.replace("  reset S0\n", "")
    with pytest.raises(FormatError):
        parse_design(bad)


def test_ground_truth_round_trip():
    fsm, dp = parse_design(DOC)
    _, gt = synthesize(fsm, dp)
    from fsmtrap.obfuscate import gt_with_honeypots

    gt = gt_with_honeypots(gt, {"hp_fsm_st0"})
    text = ground_truth_text(gt)
    assert "sff u0_st0" in text
    assert "counter c u0_c_0" in text
    assert "honeypot hp_fsm_st0" in text
    again = parse_ground_truth(text)
    assert again.sffs == gt.sffs
    assert again.counter_dict() == gt.counter_dict()
    assert again.data_dict() == gt.data_dict()
    assert again.honeypots == gt.honeypots


def test_ground_truth_bad_line():
    with pytest.raises(FormatError):
        parse_ground_truth("sff\n")
