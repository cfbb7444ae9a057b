import csv
import math

import pytest

from ricci_lab import cli
from ricci_lab.errors import ConfigError

SMALL = """\
name = small
n = 3
N = 33
initial = roundSphere
initial.r0 = 1.0
step.qMax = 2e3
criteria = intSupRic, spaceTimeLp, logWeighted
criteria.spaceTimeLp.p = 2, 2.5
rescaling.count = 3
"""


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ROOT_ENV, str(tmp_path))
    return tmp_path


def _summary(path):
    with open(path, encoding="utf-8") as fh:
        return dict(list(csv.reader(fh))[1:])


def test_parse_defaults_and_values():
    cfg = cli.parse_config(SMALL)
    assert cfg.name == "small" and cfg.N == 33
    assert cfg.control.qMax == 2e3
    assert [c.label for c in cfg.criteria] == ["intSupRic", "spaceTimeLp_p2", "spaceTimeLp_p2.5", "logWeighted"]
    assert cfg.output == "small"
    assert cfg.gronwallC == "auto"


@pytest.mark.parametrize("text,line,path", [
    ("name = a\nN = 33\nbogus = 1\n", 3, "bogus"),
    ("name = a\ncriteria = intSupRic, nope\n", 2, "criteria"),
    ("name = a\ncriteria = spaceTimeLp\ncriteria.spaceTimeLp.p = 0.5\n", 3, "criteria.spaceTimeLp.p"),
    ("name = a\nN = 4\n", 2, "N"),
    ("name = a\nn = 3\nn = 4\n", 3, "n"),
    ("name = a\n\nstep.cflSafety = 2\n", 3, "cflSafety"),
    ("name = a\ninitial = dumbbell\ninitial.neckRadius = 3\n", 3, "initial.neckRadius"),
    ("name = a\ninitial.r0 = x\n", 2, "initial.r0"),
    ("name = a\nstop = time\n", 2, "stop.time"),
    ("name = a\njust text\n", 2, None),
])
def test_parse_errors_name_line(text, line, path):
    with pytest.raises(ConfigError) as ei:
        cli.parse_config(text)
    assert ei.value.line == line
    if path is not None:
        assert path in str(ei.value)
    assert f"line {line}" in str(ei.value)


def test_missing_name():
    with pytest.raises(ConfigError, match="name"):
        cli.parse_config("N = 33\n")


def test_fmt():
    assert cli.fmt(0.1) == "0.1"
    assert cli.fmt(True) == "true"
    assert cli.fmt(math.inf) == "inf"
    assert cli.fmt(None) == ""
    assert float(cli.fmt(1 / 3)) == 1 / 3


def test_run_writes_artifacts_and_is_deterministic(out_root, tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(SMALL)
    assert cli.main(["run", str(cfg)]) == 0
    out = out_root / "small"
    names = {p.name for p in out.iterdir()}
    for f in ("trajectory.csv", "criteria_intSupRic.csv", "criteria_spaceTimeLp_p2.5.csv", "sobolev.csv",
              "rescaled_summary.csv", "rescaled_0.csv", "gronwall.csv", "summary.csv", "report.txt"):
        assert f in names
    first = {f: (out / f).read_bytes() for f in names}
    assert cli.main(["run", str(cfg)]) == 0
    assert {f: (out / f).read_bytes() for f in names} == first
    S = _summary(out / "summary.csv")
    assert float(S["singularTime.T"]) == pytest.approx(0.25, rel=1e-3)
    assert S["verdict"] == cli.gw.NO_GUARANTEE
    # every number in the report is traceable to summary.csv
    report = (out / "report.txt").read_text()
    for k, v in S.items():
        assert f"{k}" in report and v in report


def test_report_subcommand(out_root, tmp_path, capsys):
    cfg = tmp_path / "s.cfg"
    cfg.write_text(SMALL)
    cli.main(["run", str(cfg)])
    capsys.readouterr()
    assert cli.main(["report", "small"]) == 0
    assert "singularTime.T" in capsys.readouterr().out
    assert cli.main(["report", str(tmp_path / "missing")]) == cli.EXIT_IO


def test_exit_codes(out_root, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("name = x\nbogus = 1\n")
    assert cli.main(["run", str(bad)]) == cli.EXIT_CONFIG
    assert cli.main(["run", str(tmp_path / "nope.cfg")]) == cli.EXIT_IO
    # a step floor above every admissible step: the run stops at once and no singular time can be fitted
    under = tmp_path / "under.cfg"
    under.write_text("name = under\nN = 33\nstep.dtMin = 1\n")
    assert cli.main(["run", str(under)]) == cli.EXIT_NUMERIC
    blocker = tmp_path / "file"
    blocker.write_text("")
    io_cfg = tmp_path / "io.cfg"
    io_cfg.write_text(f"name = io\nN = 33\nstop = time\nstop.time = 0.01\noutput = {blocker}/sub\n")
    assert cli.main(["run", str(io_cfg)]) == cli.EXIT_IO


def test_sweep_empty_range(out_root):
    assert cli.sweep(SMALL, {"initial.r0": []}) == 0
    rows = list(csv.reader(open(out_root / "small" / "summary.csv")))
    assert len(rows) == 1


def test_sweep_family(out_root, tmp_path):
    text = "name = fam\nN = 33\nstep.qMax = 2e3\nrescaling.count = 0\n"
    cfg = tmp_path / "f.cfg"
    cfg.write_text(text)
    assert cli.main(["sweep", str(cfg), "--vary", "initial.r0=0.8,1.0,1.2", "--jobs", "2"]) == 0
    with open(out_root / "fam" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["initial.r0"] for r in rows] == ["0.8", "1.0", "1.2"]
    for r in rows:
        r0 = float(r["initial.r0"])
        assert float(r["singularTime.T"]) == pytest.approx(r0 ** 2 / 4, rel=1e-2)
        assert r["exitCode"] == "0"


def test_sweep_records_failing_cell(out_root):
    assert cli.sweep("name = bad\nN = 33\nstep.qMax = 2e3\n", {"N": ["4", "33"]}) == 0
    with open(out_root / "bad" / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["exitCode"] for r in rows] == ["2", "0"]


def test_vary_syntax():
    with pytest.raises(ConfigError):
        cli._parse_vary(["noequals"])
