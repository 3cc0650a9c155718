import json
import os

import pytest

from axlecount.cli import RunConfig, load_config, main
from axlecount.detections import VehicleClass, write_stream
from axlecount.pipeline import results_from_jsonl
from axlecount.simulator import CameraSpec, NoiseSpec, Scenario, VehicleSpec, build_suite, generate


def listing(path):
    return sorted(os.listdir(path))


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def write_frames(path, frames):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_stream(frames))
    return str(path)


# --- simulate ------------------------------------------------------------------


def test_simulate_writes_stream_and_truth(tmp_path):
    out = tmp_path / "a"
    assert main(["simulate", "--difficulty", "easy", "--n", "2", "--seed", "7", "--out", str(out)]) == 0
    names = listing(out)
    assert [n for n in names if n.endswith(".stream.jsonl")] == ["easy_0000.stream.jsonl", "easy_0001.stream.jsonl"]
    assert [n for n in names if n.endswith(".truth.json")] == ["easy_0000.truth.json", "easy_0001.truth.json"]

    again = tmp_path / "b"
    main(["simulate", "--difficulty", "easy", "--n", "2", "--seed", "7", "--out", str(again)])
    assert all(read(out / n) == read(again / n) for n in names)


def test_hard_stream_never_shows_all_tires(tmp_path):
    main(["simulate", "--difficulty", "hard", "--n", "1", "--seed", "3", "--out", str(tmp_path)])
    truth = json.loads((tmp_path / "hard_0000.truth.json").read_text())
    axles = truth["vehicles"]["0"]["axles"]
    lines = (tmp_path / "hard_0000.stream.jsonl").read_text().splitlines()
    assert max(len(json.loads(l)["tires"]) for l in lines) < axles


def test_invalid_difficulty_is_a_usage_error(tmp_path, capsys):
    assert main(["simulate", "--difficulty", "extreme", "--out", str(tmp_path)]) == 1
    assert "difficulty" in capsys.readouterr().err
    assert listing(tmp_path) == []


def test_unknown_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as err:
        main(["count", "--bogus"])
    assert err.value.code == 1


# --- count ---------------------------------------------------------------------


def test_count_easy_stream(tmp_path, capsys):
    main(["simulate", "--difficulty", "easy", "--seed", "1", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["count", str(tmp_path / "easy_0000.stream.jsonl")]) == 0
    (res,) = results_from_jsonl(capsys.readouterr().out)
    assert res.trax_axles == 2


def test_count_directory_writes_one_file_per_stream(tmp_path):
    sims, outs = tmp_path / "sims", tmp_path / "res"
    main(["simulate", "--difficulty", "medium", "--n", "3", "--seed", "2", "--out", str(sims)])
    assert main(["count", str(sims), "--out", str(outs)]) == 0
    assert listing(outs) == [f"medium_{i:04d}.results.jsonl" for i in range(3)]
    par = tmp_path / "par"
    assert main(["count", str(sims), "--out", str(par), "--jobs", "2"]) == 0
    assert all(read(outs / n) == read(par / n) for n in listing(outs))


def test_empty_stream_gives_empty_results(tmp_path):
    src = tmp_path / "empty.stream.jsonl"
    src.write_text("")
    out = tmp_path / "empty.results.jsonl"
    assert main(["count", str(src), "--out", str(out)]) == 0
    assert out.read_text() == ""


def test_corrupt_line_is_reported(tmp_path, capsys):
    frames, _ = generate(build_suite("easy", 1, 1)[0])
    lines = write_stream(frames[:40]).splitlines()
    lines[16] = '{"frame": 16, "ts": oops'
    src = tmp_path / "bad.stream.jsonl"
    src.write_text("\n".join(lines) + "\n")
    assert main(["count", str(src)]) == 2
    assert "line 17" in capsys.readouterr().err


def test_missing_stream_is_a_data_error(tmp_path):
    assert main(["count", str(tmp_path / "nope.stream.jsonl")]) == 2


# --- evaluate ------------------------------------------------------------------


def table_rows(text):
    return {line.split()[0]: line.split()[1:] for line in text.strip().splitlines()[1:]}


def test_evaluate_perfect_run(tmp_path, capsys):
    main(["simulate", "--difficulty", "easy", "--n", "3", "--seed", "4", "--out", str(tmp_path)])
    main(["count", str(tmp_path), "--out", str(tmp_path)])
    capsys.readouterr()
    csv_path, json_path = tmp_path / "rows.csv", tmp_path / "metrics.json"
    assert main(["evaluate", str(tmp_path), str(tmp_path), "--csv", str(csv_path), "--out", str(json_path)]) == 0
    rows = table_rows(capsys.readouterr().out)
    assert rows["easy"] == ["3", "1.000", "1.000"]
    assert json.loads(json_path.read_text())["overall"]["trax_accuracy"] == 1.0
    assert len(csv_path.read_text().splitlines()) == 4


def test_evaluate_hard_shows_the_gap(tmp_path, capsys):
    main(["simulate", "--difficulty", "hard", "--n", "4", "--seed", "8", "--out", str(tmp_path)])
    main(["count", str(tmp_path), "--out", str(tmp_path)])
    capsys.readouterr()
    fig = tmp_path / "acc.svg"
    assert main(["evaluate", str(tmp_path), str(tmp_path), "--figure", str(fig)]) == 0
    n, mode, trax = table_rows(capsys.readouterr().out)["hard"]
    assert n == "4" and float(trax) > float(mode)
    assert read(fig).startswith(b"<?xml")


def test_missing_results_are_flagged(tmp_path, caplog):
    main(["simulate", "--difficulty", "easy", "--n", "2", "--seed", "4", "--out", str(tmp_path)])
    res = tmp_path / "res"
    main(["count", str(tmp_path / "easy_0000.stream.jsonl"), "--out", str(res / "easy_0000.results.jsonl")])
    assert main(["evaluate", str(res), str(tmp_path)]) == 0
    assert any("easy_0001" in r.message for r in caplog.records)


# --- plot ----------------------------------------------------------------------


def counted(tmp_path, scenario):
    frames, _ = generate(scenario)
    src = write_frames(tmp_path / "s.stream.jsonl", frames)
    out = tmp_path / "s.results.jsonl"
    assert main(["count", src, "--out", str(out)]) == 0
    return str(out), results_from_jsonl(out.read_text())


def six_axle(noise=NoiseSpec()):
    truck = VehicleSpec(VehicleClass.SEMI_TRUCK, 660, 140, (30, 80, 130, 520, 570, 620), speed=5.0)
    return Scenario(CameraSpec(visibility_band=(400, 700)), (truck,), noise, seed=3, difficulty="hard")


def test_plot_six_axle_vehicle(tmp_path, capsys):
    path, (res,) = counted(tmp_path, six_axle())
    svg = tmp_path / "t.svg"
    assert main(["plot", path, "--track-id", str(res.track_id), "--out", str(svg)]) == 0
    out = capsys.readouterr().out
    assert f"track {res.track_id}: 6 axle track(s), 0 discarded point(s)" in out
    first = read(svg)
    main(["plot", path, "--track-id", str(res.track_id), "--out", str(svg)])
    assert read(svg) == first


def test_plot_shows_discarded_false_positives(tmp_path, capsys):
    path, (res,) = counted(tmp_path, six_axle(NoiseSpec(false_positive_rate=0.3)))
    capsys.readouterr()
    main(["plot", path, "--track-id", str(res.track_id), "--out", str(tmp_path / "t.svg")])
    discarded = int(capsys.readouterr().out.split(", ")[1].split()[0])
    assert discarded > 0


def test_plot_unknown_track(tmp_path, capsys):
    path, _ = counted(tmp_path, build_suite("easy", 1, 1)[0])
    assert main(["plot", path, "--track-id", "999", "--out", str(tmp_path / "x.svg")]) == 2
    assert "no track 999" in capsys.readouterr().err
    assert main(["plot", path, "--out", str(tmp_path / "x.svg")]) == 1


# --- configuration -----------------------------------------------------------


def test_flags_beat_file_beat_defaults(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"c": 2.0, "max_gap": 7}))
    cfg = load_config(str(cfg_file), {"c": 0.5, "max_gap": None})
    assert (cfg.c, cfg.max_gap, cfg.min_track_len) == (0.5, 7, RunConfig().min_track_len)
    assert cfg.pipeline().trax.c == 0.5


def test_bad_config_is_a_data_error(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"colour": 1}))
    assert main(["count", "x", "--config", str(cfg_file)]) == 2
    cfg_file.write_text("{")
    assert main(["count", "x", "--config", str(cfg_file)]) == 2


def test_config_changes_the_count(tmp_path, capsys):
    main(["simulate", "--difficulty", "easy", "--seed", "1", "--out", str(tmp_path)])
    capsys.readouterr()
    stream = str(tmp_path / "easy_0000.stream.jsonl")
    main(["count", stream, "--min-track-len", "100000"])
    (res,) = results_from_jsonl(capsys.readouterr().out)
    assert res.trax_axles == 0
