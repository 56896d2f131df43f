import hashlib
import json

import pytest
from click.testing import CliRunner

from sensecluster.cli import main



@pytest.fixture
def runner():
    return CliRunner()


def toy_flags(paths):
    return [
        "--graph-nodes",
        paths["graph_nodes"],
        "--graph-edges",
        paths["graph_edges"],
        "--inventory",
        paths["inventory"],
    ]


class TestCheckGraph:
    def test_violations_exit_one(self, runner, toy_paths):
        result = runner.invoke(main, ["check-graph"] + toy_flags(toy_paths))
        assert result.exit_code == 1
        assert "violations" in result.output

    def test_separate_then_check_exits_zero(self, runner, toy_paths, tmp_path):
        out_edges = str(tmp_path / "sep.tsv")
        result = runner.invoke(
            main,
            ["separate-graph"] + toy_flags(toy_paths) + ["--out-edges", out_edges],
        )
        assert result.exit_code == 0, result.output
        assert "removed" in result.output
        clean = toy_paths | {"graph_edges": out_edges}
        result2 = runner.invoke(main, ["check-graph"] + toy_flags(clean))
        assert result2.exit_code == 0
        assert result2.output.startswith("0 violations")

    def test_missing_file_exit_two(self, runner, toy_paths):
        bad = toy_paths | {"graph_nodes": "/nope/nodes.tsv"}
        result = runner.invoke(main, ["check-graph"] + toy_flags(bad))
        assert result.exit_code == 2

    def test_unknown_flag_exit_two(self, runner, toy_paths):
        result = runner.invoke(main, ["check-graph", "--frobnicate"])
        assert result.exit_code == 2


class TestHelp:
    @pytest.mark.parametrize(
        "command",
        ["check-graph", "separate-graph", "stats", "disambiguate", "evaluate", "gen-train"],
    )
    def test_every_subcommand_has_help(self, runner, command):
        result = runner.invoke(main, [command, "--help"])
        assert result.exit_code == 0
        assert "Usage" in result.output


class TestStats:
    def test_summary(self, runner, toy_paths):
        result = runner.invoke(main, ["stats"] + toy_flags(toy_paths))
        assert result.exit_code == 0
        assert "nodes: 245" in result.output
        assert "inventory_entries: 20" in result.output


class TestDisambiguate:
    def test_jsonl_to_stdout(self, runner, toy_paths):
        result = runner.invoke(
            main,
            ["disambiguate"]
            + toy_flags(toy_paths)
            + ["--corpus", toy_paths["corpus"], "--gold", toy_paths["gold"]]
            + ["--scorer-v", "oracle", "--scorer-nv", "oracle"],
        )
        assert result.exit_code == 0, result.output
        lines = [json.loads(l) for l in result.stdout.strip().splitlines()]
        assert len(lines) == 100
        assert all({"instance_id", "chosen", "winning_score", "tie_broken"} <= set(l) for l in lines)

    def test_byte_identical_across_runs(self, runner, toy_paths, tmp_path):
        digests = []
        for run in ("a", "b"):
            out = tmp_path / f"{run}.jsonl"
            result = runner.invoke(
                main,
                ["disambiguate"]
                + toy_flags(toy_paths)
                + ["--corpus", toy_paths["corpus"], "--seed", "7", "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_explain_includes_classes(self, runner, toy_paths):
        result = runner.invoke(
            main,
            ["disambiguate"]
            + toy_flags(toy_paths)
            + ["--corpus", toy_paths["corpus"], "--explain"],
        )
        assert result.exit_code == 0
        first = json.loads(result.stdout.splitlines()[0])
        assert "classes" in first


class TestEvaluate:
    def test_oracle_f1_one(self, runner, toy_paths):
        result = runner.invoke(
            main,
            ["evaluate"]
            + toy_flags(toy_paths)
            + ["--corpus", toy_paths["corpus"], "--gold", toy_paths["gold"]]
            + ["--scorer-v", "oracle", "--scorer-nv", "oracle", "--report", "csv"],
        )
        assert result.exit_code == 0, result.output
        overall = result.stdout.splitlines()[1]
        assert overall == "ALL,ALL,100,100,100,1.0000,1.0000,1.0000"

    def test_report_json(self, runner, toy_paths):
        result = runner.invoke(
            main,
            ["evaluate"]
            + toy_flags(toy_paths)
            + ["--corpus", toy_paths["corpus"], "--gold", toy_paths["gold"]]
            + ["--report", "json"],
        )
        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["slices"][0]["slice"] == "ALL"


class TestXmlCorpusWithMapping:
    """Full evaluate flow: XML corpus, gloss scorer, prediction keys mapped
    into the gold scheme via the overlap rule."""

    XML = """<?xml version="1.0" encoding="UTF-8"?>
<corpus lang="en" source="cranes">
 <text id="d000">
  <sentence id="d000.s000">
   <wf lemma="the" pos="OTHER">The</wf>
   <instance id="d000.s000.t000" lemma="crane" pos="NOUN">crane</instance>
   <wf lemma="be" pos="VERB">was</wf>
   <wf lemma="lift" pos="VERB">lifting</wf>
   <wf lemma="a" pos="OTHER">a</wf>
   <wf lemma="concrete" pos="ADJ">concrete</wf>
   <wf lemma="block" pos="NOUN">block</wf>
  </sentence>
  <sentence id="d000.s001">
   <wf lemma="the" pos="OTHER">The</wf>
   <instance id="d000.s001.t000" lemma="crane" pos="NOUN">crane</instance>
   <wf lemma="wade" pos="VERB">waded</wf>
   <wf lemma="in" pos="OTHER">in</wf>
   <wf lemma="the" pos="OTHER">the</wf>
   <wf lemma="marsh" pos="NOUN">marsh</wf>
  </sentence>
 </text>
</corpus>
"""

    @pytest.fixture
    def world(self, tmp_path):
        (tmp_path / "nodes.tsv").write_text(
            "id\tpos\tlanguage\tlemmas\tgloss\n"
            "c_machine\tNOUN\ten\tcrane\ta lifting machine used on a construction block\n"
            "c_bird\tNOUN\ten\tcrane\ta wading bird of the marsh\n",
            encoding="utf-8",
        )
        (tmp_path / "edges.tsv").write_text("src\tdst\trelation\n", encoding="utf-8")
        (tmp_path / "inventory.tsv").write_text(
            "lemma\tpos\tsenses\ncrane\tNOUN\tc_machine,c_bird\n", encoding="utf-8"
        )
        (tmp_path / "corpus.xml").write_text(self.XML, encoding="utf-8")
        (tmp_path / "gold.txt").write_text(
            "d000.s000.t000 bn:mach\nd000.s001.t000 bn:bird\n", encoding="utf-8"
        )
        (tmp_path / "mapping.tsv").write_text(
            "external_key\tsense_id\nc_machine\tbn:mach\nc_bird\tbn:bird\n",
            encoding="utf-8",
        )
        return tmp_path

    def test_xml_gloss_mapping_perfect(self, runner, world):
        result = runner.invoke(
            main,
            [
                "evaluate",
                "--graph-nodes", str(world / "nodes.tsv"),
                "--graph-edges", str(world / "edges.tsv"),
                "--inventory", str(world / "inventory.tsv"),
                "--corpus", str(world / "corpus.xml"),
                "--gold", str(world / "gold.txt"),
                "--mapping", str(world / "mapping.tsv"),
                "--report", "csv",
            ],
        )
        assert result.exit_code == 0, result.output
        lines = result.stdout.splitlines()
        assert lines[1] == "ALL,ALL,2,2,2,1.0000,1.0000,1.0000"
        assert any(line.startswith("cranes,dataset") for line in lines)


class TestGenTrain:
    def test_deterministic_outputs(self, runner, toy_paths, tmp_path):
        digests = []
        for run in ("a", "b"):
            prefix = tmp_path / run / "train"
            result = runner.invoke(
                main,
                ["gen-train"]
                + toy_flags(toy_paths)
                + [
                    "--corpus",
                    toy_paths["corpus"],
                    "--gold",
                    toy_paths["gold"],
                    "--out-prefix",
                    str(prefix),
                    "--seed",
                    "42",
                ],
            )
            assert result.exit_code == 0, result.output
            bundle = b"".join(
                p.read_bytes() for p in sorted(prefix.parent.iterdir())
            )
            digests.append(hashlib.sha256(bundle).hexdigest())
        assert digests[0] == digests[1]


class TestRemoteServer:
    @pytest.fixture
    def live_server(self):
        import socket
        import threading
        import time

        import uvicorn

        from sensecluster.service import create_app

        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()
        config = uvicorn.Config(
            create_app(), host="127.0.0.1", port=port, log_level="error"
        )
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.monotonic() + 10
        while not server.started and time.monotonic() < deadline:
            time.sleep(0.02)
        assert server.started
        yield f"http://127.0.0.1:{port}"
        server.should_exit = True
        thread.join(timeout=5)

    def test_cli_drives_remote_service(self, runner, toy_paths, live_server):
        result = runner.invoke(
            main, ["--server", live_server, "stats"] + toy_flags(toy_paths)
        )
        assert result.exit_code == 0, result.output
        assert "nodes: 245" in result.output

    def test_remote_evaluate_matches_in_process(self, runner, toy_paths, live_server):
        args = (
            ["evaluate"]
            + toy_flags(toy_paths)
            + ["--corpus", toy_paths["corpus"], "--gold", toy_paths["gold"]]
            + ["--scorer-v", "oracle", "--scorer-nv", "oracle", "--report", "csv"]
        )
        local = runner.invoke(main, args)
        remote = runner.invoke(main, ["--server", live_server] + args)
        assert remote.exit_code == 0, remote.output
        assert remote.stdout == local.stdout

    def test_unreachable_server_fails_cleanly(self, runner, toy_paths):
        result = runner.invoke(
            main,
            ["--server", "http://127.0.0.1:9", "stats"] + toy_flags(toy_paths),
        )
        assert result.exit_code == 1
        assert "unreachable" in (result.stderr or result.output)


class TestConfigFile:
    def test_config_supplies_defaults(self, runner, toy_paths, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps(toy_paths | {"scorer_v": "oracle", "scorer_nv": "oracle"}))
        result = runner.invoke(
            main,
            [
                "--config",
                str(config),
                "evaluate",
                "--corpus",
                toy_paths["corpus"],
                "--gold",
                toy_paths["gold"],
                "--report",
                "csv",
            ],
        )
        assert result.exit_code == 0, result.output
        assert result.stdout.splitlines()[1].endswith("1.0000,1.0000,1.0000")

    def test_flags_override_config(self, runner, toy_paths, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps(toy_paths | {"graph_nodes": "/bogus/path.tsv"}))
        result = runner.invoke(
            main,
            ["--config", str(config), "stats", "--graph-nodes", toy_paths["graph_nodes"]],
        )
        assert result.exit_code == 0, result.output

    def test_bad_config_exit_two(self, runner, tmp_path):
        config = tmp_path / "config.json"
        config.write_text("not json at all")
        result = runner.invoke(main, ["--config", str(config), "stats"])
        assert result.exit_code == 2
