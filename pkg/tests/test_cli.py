import json

import pytest

from provkit.cli import main

from .conftest import FIXTURES, write_service_config


@pytest.fixture()
def workspace(tmp_path):
    """A self-contained config whose corpus/index start empty."""
    data = tmp_path / "data"
    config = write_service_config(
        tmp_path / "config.json",
        corpus_dir=data / "corpus",
        index_path=data / "index.bin",
        data_dir=data,
    )
    return tmp_path, config


def bundles():
    return sorted(str(p) for p in (FIXTURES / "corpus_bundles").iterdir() if p.is_dir())


def run_pipeline_setup(config):
    args = ["ingest", "--config", str(config)]
    for b in bundles():
        args += ["--bundle", b]
    assert main(args) == 0
    assert main(["index", "--config", str(config)]) == 0


class TestIngest:
    def test_ingest_updates_manifest(self, workspace, capsys):
        tmp, config = workspace
        code = main(["ingest", "--config", str(config), "--bundle", bundles()[0]])
        assert code == 0
        manifest = json.loads((tmp / "data" / "corpus" / "manifest.json").read_text())
        assert len(manifest["documents"]) == 1
        assert "ingested" in capsys.readouterr().out

    def test_duplicate_ingest_fails_nonzero(self, workspace, capsys):
        _, config = workspace
        bundle = bundles()[0]
        assert main(["ingest", "--config", str(config), "--bundle", bundle]) == 0
        assert main(["ingest", "--config", str(config), "--bundle", bundle]) == 1
        assert "already ingested" in capsys.readouterr().err


class TestIndex:
    def test_index_writes_file(self, workspace, capsys):
        tmp, config = workspace
        run_pipeline_setup(config)
        assert (tmp / "data" / "index.bin").exists()
        out = capsys.readouterr().out
        assert "raw: 10" in out

    def test_unreachable_embed_endpoint_named_in_error(self, workspace, capsys):
        tmp, config = workspace
        assert main(["ingest", "--config", str(config), "--bundle", bundles()[0]]) == 0
        raw = json.loads(config.read_text())
        raw["embedder"] = {"kind": "remote", "endpoint": "http://127.0.0.1:9/embed"}
        config.write_text(json.dumps(raw))
        code = main(["index", "--config", str(config)])
        assert code == 1
        err = capsys.readouterr().err
        assert "127.0.0.1:9" in err and "unreachable" in err


class TestAnalyze:
    def test_golden_report_file(self, workspace, golden_report_bytes, capsys):
        tmp, config = workspace
        run_pipeline_setup(config)
        out_path = tmp / "report.json"
        code = main(
            [
                "analyze",
                "--config", str(config),
                "--image", str(FIXTURES / "query.png"),
                "--k", "5",
                "--m", "10",
                "--out", str(out_path),
            ]
        )
        assert code == 0
        assert out_path.read_bytes() == golden_report_bytes
        assert "best reference: ordos-plates p.2" in capsys.readouterr().out

    def test_missing_index_is_stage_error(self, workspace, capsys):
        tmp, config = workspace
        assert main(["ingest", "--config", str(config), "--bundle", bundles()[0]]) == 0
        code = main(
            ["analyze", "--config", str(config), "--image", str(FIXTURES / "query.png")]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_cli_report_equals_api_report(
        self, tmp_path, fixture_store, fixture_index, query_bytes
    ):
        from fastapi.testclient import TestClient

        from provkit.service import AnalysisEngine, ServiceConfig, create_app

        config = write_service_config(
            tmp_path / "config.json",
            corpus_dir=fixture_store.root,
            index_path=fixture_index.path,
            data_dir=tmp_path / "data",
        )
        out_path = tmp_path / "cli-report.json"
        assert (
            main(
                [
                    "analyze",
                    "--config", str(config),
                    "--image", str(FIXTURES / "query.png"),
                    "--out", str(out_path),
                ]
            )
            == 0
        )

        engine = AnalysisEngine(ServiceConfig.load(config))
        try:
            with TestClient(create_app(engine)) as client:
                job_id = client.post(
                    "/api/analyses",
                    files={"file": ("q.png", query_bytes, "image/png")},
                ).json()["job_id"]
                import time

                for _ in range(400):
                    job = client.get(f"/api/analyses/{job_id}").json()
                    if job["state"] in ("done", "failed"):
                        break
                    time.sleep(0.05)
                assert job["state"] == "done"
                api_report = client.get(f"/api/analyses/{job_id}/report").content
        finally:
            engine.stop()
        assert api_report == out_path.read_bytes()


class TestEvalReport:
    def test_text_and_json_formats(self, workspace, capsys):
        tmp, config = workspace
        scores = tmp / "data" / "scores.jsonl"
        scores.parent.mkdir(parents=True, exist_ok=True)
        rows = [
            {"object_id": "o1", "question": "Q1", "rater_id": "r", "score": 2, "timestamp": 1.0,
             "comment": None},
            {"object_id": "o2", "question": "Q1", "rater_id": "r", "score": 4, "timestamp": 2.0,
             "comment": None},
        ]
        scores.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        assert main(["eval-report", "--config", str(config), "--question", "Q1"]) == 0
        text = capsys.readouterr().out
        assert "meaningful (2-4): 100.0%" in text

        assert main(
            ["eval-report", "--config", str(config), "--question", "Q1", "--format", "json"]
        ) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["counts"] == {"1": 0, "2": 1, "3": 0, "4": 1}

    def test_no_scores_nonzero_exit(self, workspace, capsys):
        _, config = workspace
        assert main(["eval-report", "--config", str(config), "--question", "Q2"]) == 1
        assert "no scores" in capsys.readouterr().err


def test_unknown_verb_exits_with_usage():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
