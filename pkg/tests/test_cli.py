"""Command-line workflows end to end, plus the exit-code contract."""

import json

import pytest

from reformulator.checkpoint import load_checkpoint
from reformulator.cli import main
from reformulator.corpus import load_sessions

CONFIG_TEXT = (
    "# small run for the command-line tests\n"
    "emb_dim = 5\n"
    "query_hidden = 3\n"
    "session_hidden = 6\n"
    "decoder_hidden = 4\n"
    "attn_dim = 4\n"
    "vocab_cap = 80\n"
    "seed = 3\n"
    "synth_sessions = 12\n"
    "max_epochs = 2\n"
    "batch_size = 4\n"
    "beam_width = 2\n"
    "ranker = ce\n")


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Config file, synthesized session log, and a trained checkpoint."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "run.cfg"
    cfg.write_text(CONFIG_TEXT)
    data = root / "sessions.jsonl"
    assert main(["synth", "--config", str(cfg), "--out", str(data)]) == 0
    ckpt = root / "model.ckpt"
    assert main(["train", "--config", str(cfg), "--data", str(data),
                 "--out", str(ckpt)]) == 0
    return root, cfg, data, ckpt


class TestSynth:
    def test_same_seed_same_bytes(self, ws, tmp_path):
        _, cfg, data, _ = ws
        again = tmp_path / "again.jsonl"
        assert main(["synth", "--config", str(cfg), "--out", str(again)]) == 0
        assert again.read_bytes() == data.read_bytes()

    def test_seed_override_changes_output(self, ws, tmp_path):
        _, cfg, data, _ = ws
        other = tmp_path / "other.jsonl"
        assert main(["synth", "--config", str(cfg), "--out", str(other),
                     "--seed", "9"]) == 0
        assert other.read_bytes() != data.read_bytes()

    def test_summary_printed(self, ws, tmp_path, capsys):
        _, cfg, _, _ = ws
        main(["synth", "--config", str(cfg), "--out", str(tmp_path / "s.jsonl")])
        out = capsys.readouterr().out
        assert "sessions" in out and "observed_mrr" in out


class TestTrain:
    def test_artifacts_written(self, ws):
        _, _, _, ckpt = ws
        assert ckpt.exists()
        assert (ckpt.parent / (ckpt.name + ".log")).exists()
        report = json.loads((ckpt.parent / (ckpt.name + ".eval.json")).read_text())
        assert report["n_queries"] > 0
        assert report["beam_width"] == 2
        assert report["mrr"] is not None

    def test_missing_data_flag_is_usage_error(self, ws):
        _, cfg, _, _ = ws
        assert main(["train", "--config", str(cfg)]) == 1


class TestEvaluate:
    def test_matches_training_report(self, ws, tmp_path, capsys):
        _, _, data, ckpt = ws
        out = tmp_path / "re-eval.txt"
        assert main(["evaluate", "--checkpoint", str(ckpt), "--data", str(data),
                     "--out", str(out)]) == 0
        trained = (ckpt.parent / (ckpt.name + ".eval.txt")).read_bytes()
        assert out.read_bytes() == trained
        assert "bleu_pct" in capsys.readouterr().out

    def test_json_out_matches_training_json(self, ws, tmp_path):
        _, _, data, ckpt = ws
        out = tmp_path / "re-eval.json"
        assert main(["evaluate", "--checkpoint", str(ckpt), "--data", str(data),
                     "--out", str(out)]) == 0
        trained = (ckpt.parent / (ckpt.name + ".eval.json")).read_bytes()
        assert out.read_bytes() == trained


class TestGenerate:
    def test_candidates_per_query(self, ws, tmp_path):
        _, _, data, ckpt = ws
        out = tmp_path / "gen.jsonl"
        assert main(["generate", "--checkpoint", str(ckpt), "--data", str(data),
                     "--out", str(out)]) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        n_queries = sum(len(s.queries) for s in load_sessions(data))
        assert len(lines) == n_queries
        assert all(len(l["candidates"]) == 2 for l in lines)

    def test_top1_flag(self, ws, tmp_path):
        _, _, data, ckpt = ws
        out = tmp_path / "gen1.jsonl"
        assert main(["generate", "--checkpoint", str(ckpt), "--data", str(data),
                     "--out", str(out), "--top1"]) == 0
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert all(len(l["candidates"]) == 1 for l in lines)

    def test_logprobs_recompute(self, ws, tmp_path):
        _, _, data, ckpt = ws
        out = tmp_path / "gen.jsonl"
        main(["generate", "--checkpoint", str(ckpt), "--data", str(data),
              "--out", str(out)])
        model, _, _ = load_checkpoint(ckpt)
        from reformulator.corpus import encode_sessions
        sessions = {s.session_id: s
                    for s in encode_sessions(load_sessions(data), model.vocab)}
        checked = 0
        for line in out.read_text().splitlines()[:6]:
            rec = json.loads(line)
            session = sessions[rec["session_id"]]
            _, session_vec = model.encode_session(session)[rec["query_index"]]
            for cand in rec["candidates"]:
                want = model.sequence_logprob_from_vec(session_vec, cand["tokens"])
                assert abs(cand["logprob"] - want) < 1e-9
                checked += 1
        assert checked > 0


class TestGradCheck:
    def test_all_variants_pass(self, ws, capsys):
        _, cfg, _, _ = ws
        assert main(["grad-check", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert "FAIL" not in out

    def test_injected_fault_reported(self, ws, capsys):
        _, cfg, _, _ = ws
        assert main(["grad-check", "--config", str(cfg),
                     "--inject-gradient-fault"]) == 3
        assert "FAIL" in capsys.readouterr().out


class TestExitCodes:
    def test_unknown_config_key(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("momentum = 0.9\n")
        assert main(["synth", "--config", str(bad),
                     "--out", str(tmp_path / "x.jsonl")]) == 1

    def test_missing_config_flag(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "x.jsonl")]) == 1

    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == 1

    def test_missing_data_file(self, ws, tmp_path):
        _, cfg, _, _ = ws
        assert main(["train", "--config", str(cfg),
                     "--data", str(tmp_path / "absent.jsonl"),
                     "--out", str(tmp_path / "m.ckpt")]) == 2

    def test_corrupt_checkpoint(self, ws, tmp_path):
        _, _, data, _ = ws
        junk = tmp_path / "junk.ckpt"
        junk.write_bytes(b"not a checkpoint\n\x00\x01")
        assert main(["evaluate", "--checkpoint", str(junk),
                     "--data", str(data)]) == 2
