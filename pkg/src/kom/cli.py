"""The ``kom`` command line: thin adapters over the pipeline modules."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click


def _fail(exc: Exception) -> None:
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
    )
    raise SystemExit(1)


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


@click.group()
def main() -> None:
    """Knee osteoarthritis management pipeline."""


# -- assess -----------------------------------------------------------------
@main.command()
@click.option("--script", "script_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--mock-llm", "seed", type=int, default=0, show_default=True)
@click.option("--imaging", "imaging_path", type=click.Path(exists=True), default=None)
def assess(script_path: str, out_path: str, seed: int, imaging_path: str | None) -> None:
    """Run a scripted intake session and write the evaluation report."""
    try:
        from kom.llm import LLMClientConfig
        from kom.assessment.scripted import ScriptedPatient, run_scripted_session

        script = ScriptedPatient.from_file(script_path)
        findings = json.loads(Path(imaging_path).read_text()) if imaging_path else None
        _, report = run_scripted_session(
            script,
            llm_config=LLMClientConfig(backend="mock", seed=seed),
            imaging_findings=findings,
        )
        Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=True))
        click.echo(f"wrote {out_path}")
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _fail(exc)


# -- imaging ------------------------------------------------------------------
@main.group()
def imaging() -> None:
    """Train and run the radiograph models."""


@imaging.command("train")
@click.option("--task", required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), default=None)
@click.option("--synthetic", "synthetic_n", type=int, default=None,
              help="Generate N synthetic studies instead of reading --data.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def imaging_train(task, data_dir, synthetic_n, seed, epochs, out_dir):
    """Train the localizer or one classification task head."""
    try:
        from kom.imaging.io import load_study, save_classifier, save_localizer
        from kom.imaging.types import TrainConfig, CLASSIFICATION_TASKS

        if task == "localizer":
            if synthetic_n:
                from kom.imaging.synthetic import make_blob_dataset

                dataset = make_blob_dataset(synthetic_n, seed=seed)
            else:
                dataset = _load_localizer_data(data_dir)
            cfg = TrainConfig.for_localizer(seed=seed, **({"epochs": epochs} if epochs else {}))
            from kom.imaging.localizer import train_localizer

            model, history = train_localizer(dataset, cfg)
            save_localizer(out_dir, model)
            click.echo(json.dumps({"best_epoch": model.best_epoch, "metrics": model.metrics}))
            return

        if task not in CLASSIFICATION_TASKS:
            raise ValueError(f"unknown task {task!r}")
        if synthetic_n:
            from kom.imaging.synthetic import make_texture_dataset, texture_preprocess

            cardinality = CLASSIFICATION_TASKS[task]
            dataset = make_texture_dataset(synthetic_n, seed=seed, n_classes=cardinality)
            preprocess = texture_preprocess()
        else:
            dataset, preprocess = _load_classifier_data(data_dir, task)
        cfg = TrainConfig.for_classifier(
            seed=seed, **({"epochs": epochs} if epochs else {"epochs": 12, "initial_lr": 1e-3})
        )
        from kom.imaging.classifier import train_classifier

        model, folds = train_classifier(task, dataset, cfg, preprocess=preprocess)
        save_classifier(Path(out_dir) / task, model)
        click.echo(json.dumps({"task": task, "cv_accuracy_mean": model.metrics["cv_accuracy_mean"]}))
    except Exception as exc:
        _fail(exc)


def _load_localizer_data(data_dir):
    import numpy as np
    from PIL import Image

    if data_dir is None:
        raise ValueError("provide --data or --synthetic")
    pairs = []
    for png in sorted(Path(data_dir).glob("*.png")):
        if png.stem.endswith("_mask"):
            continue
        mask_path = png.with_name(png.stem + "_mask.png")
        if not mask_path.exists():
            continue
        img = np.asarray(Image.open(png), dtype=np.float64)
        img = img / max(img.max(), 1.0)
        mask = (np.asarray(Image.open(mask_path), dtype=np.float64) > 0).astype(np.float64)
        pairs.append((img, mask))
    if not pairs:
        raise ValueError(f"no (image, mask) pairs under {data_dir}")
    return pairs


def _load_classifier_data(data_dir, task):
    import numpy as np
    from PIL import Image

    from kom.imaging.types import PreprocessConfig

    if data_dir is None:
        raise ValueError("provide --data or --synthetic")
    items = []
    for png in sorted(Path(data_dir).glob("*.png")):
        sidecar = png.with_suffix(".json")
        if not sidecar.exists():
            continue
        labels = json.loads(sidecar.read_text()).get("labels", {})
        if task not in labels:
            continue
        img = np.asarray(Image.open(png), dtype=np.float64)
        img = img / max(img.max(), 1.0)
        items.append((img, int(labels[task])))
    if not items:
        raise ValueError(f"no labeled studies for task {task!r} under {data_dir}")
    size = items[0][0].shape[0]
    preprocess = PreprocessConfig(
        window_center=0.5, window_width=1.0, resize_to=size, crop_to=max(8, size - 4),
        augmentations=frozenset({"horizontal-flip"}),
    )
    return items, preprocess


@imaging.command("infer")
@click.option("--study", "study_path", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True))
@click.option("--emit-heatmaps", is_flag=True, default=False)
@click.option("--out", "out_path", type=click.Path(), default=None)
def imaging_infer(study_path, models_dir, emit_heatmaps, out_path):
    """Localize both knees and classify severity and features."""
    try:
        from kom.imaging.classifier import classify_knee
        from kom.imaging.gradcam import grad_cam
        from kom.imaging.io import load_model_set, load_study
        from kom.imaging.localizer import localize_knee_centers
        from kom.imaging.preprocess import extract_rois
        from kom.imaging.types import ImagingFindings, PreprocessConfig

        study, _ = load_study(study_path)
        models = load_model_set(models_dir)
        localizer = models.pop("localizer", None) or models.pop("localizer-pair", None)
        if localizer is None:
            raise ValueError("models directory has no localizer artifact")
        loc = localize_knee_centers(study, localizer)
        if not loc.centers:
            click.echo(json.dumps({"study_id": study.study_id, "knees": {}}))
            return
        size = next(iter(models.values())).input_size
        cfg = PreprocessConfig(window_center=0.5, window_width=1.0, resize_to=size,
                               crop_to=size, augmentations=frozenset())
        knees = {}
        for roi in extract_rois(study, loc, cfg):
            findings = classify_knee(roi, models)
            if emit_heatmaps:
                sev_model = models.get("severity")
                if sev_model is not None:
                    class_idx = findings.severity.rank if sev_model.cardinality == 4 else findings.kl_estimate
                    findings.heatmaps["severity"] = grad_cam(sev_model, roi, class_idx)
            knees[roi.side.value] = findings
        doc = ImagingFindings(study_id=study.study_id, knees=knees).to_dict()
        payload = json.dumps(doc, indent=2, sort_keys=True)
        if out_path:
            Path(out_path).write_text(payload)
            click.echo(f"wrote {out_path}")
        else:
            click.echo(payload)
    except Exception as exc:
        _fail(exc)


# -- risk ---------------------------------------------------------------------
@main.group()
def risk() -> None:
    """Train outcome models and emit risk reports."""


@risk.command("train")
@click.option("--task", "task_id", required=True)
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--families", default=None, help="Comma-separated family subset.")
def risk_train(task_id, data_path, seed, out_dir, families):
    """Run the model suite for one task, select the winner, persist it."""
    try:
        import pandas as pd

        from kom.risk.features import classification_targets
        from kom.risk.io import save_risk_model
        from kom.risk.suite import (
            TaskSpec,
            fit_final_model,
            run_classification_suite,
            run_regression_suite,
            select_best_model,
            table_hash,
        )
        from kom.risk.preprocess import preprocess, PreprocessSpec
        from kom.risk.features import column_spec

        table = (
            pd.read_csv(data_path)
            if str(data_path).endswith(".csv")
            else pd.DataFrame(_read_jsonl(data_path))
        )
        kind = "classification" if task_id in classification_targets() else "regression"
        task = TaskSpec(task_id=task_id, kind=kind, target=task_id)
        family_list = families.split(",") if families else None
        if kind == "classification":
            results = run_classification_suite(task, table, seed=seed, families=family_list)
        else:
            results = run_regression_suite(task, table, seed=seed, families=family_list)
        card = select_best_model(results, task, seed=seed, data_hash=table_hash(table))
        card = fit_final_model(card, task, table)
        spec_map = column_spec()
        features = table[[c for c in table.columns if c in spec_map]]
        design, _ = preprocess(features, PreprocessSpec(), spec_map=spec_map)
        background = design.to_numpy()[:50]
        path = save_risk_model(out_dir, card, background)
        _write_metrics_csv(path / "metrics.csv", results)
        click.echo(json.dumps({"task": task_id, "family": card.family, "saved": str(path)}))
    except Exception as exc:
        _fail(exc)


def _write_metrics_csv(path, suite_results):
    import csv

    metric_keys = sorted(
        {
            k
            for payload in suite_results.values()
            for row in payload["fold_rows"]
            for k, v in row.items()
            if isinstance(v, (int, float)) and k != "fold"
        }
    )
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "fold"] + metric_keys)
        for family in sorted(suite_results):
            for row in suite_results[family]["fold_rows"]:
                writer.writerow(
                    [family, row["fold"]] + [row.get(k, "") for k in metric_keys]
                )


@risk.command("predict")
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
def risk_predict(report_path, models_dir, out_path, seed):
    """Predict every trained task for one evaluation report."""
    try:
        from kom.risk.io import load_risk_models
        from kom.service.pipeline import PipelineRunner

        eval_report = json.loads(Path(report_path).read_text())
        cards, backgrounds = load_risk_models(models_dir)
        runner = PipelineRunner(risk_cards=cards, risk_backgrounds=backgrounds, seed=seed)
        doc = runner.predict_risk(eval_report, report_id=f"risk-{eval_report['report_id']}")
        Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True))
        click.echo(f"wrote {out_path}")
    except Exception as exc:
        _fail(exc)


# -- knowledge bases ------------------------------------------------------------
@main.group()
def kb() -> None:
    """Evidence corpus management."""


@kb.command("ingest")
@click.option("--domain", required=True)
@click.option("--file", "file_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def kb_ingest(domain, file_path, out_path):
    """Validate and index one JSONL evidence corpus."""
    try:
        from kom.therapy.kb import ingest_evidence

        knowledge_base, rejects = ingest_evidence(file_path, domain=domain)
        result = {"manifest": knowledge_base.build_manifest, "rejects": rejects}
        if out_path:
            Path(out_path).write_text(json.dumps(result, indent=2, sort_keys=True))
        click.echo(json.dumps(result["manifest"]))
    except Exception as exc:
        _fail(exc)


# -- therapy ---------------------------------------------------------------------
@main.group()
def therapy() -> None:
    """Multidisciplinary plan generation."""


@therapy.command("plan")
@click.option("--eval", "eval_path", required=True, type=click.Path(exists=True))
@click.option("--risk", "risk_path", type=click.Path(exists=True), default=None)
@click.option("--kb-dir", "kb_dir", required=True, type=click.Path(exists=True))
@click.option("--mock-llm", "seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def therapy_plan(eval_path, risk_path, kb_dir, seed, out_path):
    """Run the MDT discussion and write the final management plan."""
    try:
        from kom.therapy.agents import MockTherapyLLM, make_default_agents
        from kom.therapy.kb import ingest_evidence
        from kom.therapy.mdt import run_mdt
        from kom.therapy.plan import synthesize_plan

        eval_report = json.loads(Path(eval_path).read_text())
        risk_report = json.loads(Path(risk_path).read_text()) if risk_path else None
        kbs = {}
        for path in sorted(Path(kb_dir).glob("*.jsonl")):
            base, rejects = ingest_evidence(path, domain=path.stem)
            kbs[path.stem] = base
        agents = make_default_agents(kbs, llm=MockTherapyLLM(seed=seed))
        transcript = run_mdt(eval_report, risk_report, agents)
        plan = synthesize_plan(transcript, eval_report.get("patient_profile", {}))
        plan["transcript"] = transcript.to_dict()
        Path(out_path).write_text(json.dumps(plan, indent=2, sort_keys=True))
        click.echo(f"wrote {out_path}")
    except Exception as exc:
        _fail(exc)


# -- evaluation --------------------------------------------------------------------
@main.group(name="eval")
def eval_group() -> None:
    """Similarity metrics and study harnesses."""


@eval_group.command("similarity")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
def eval_similarity(pred_path, gold_path):
    """Score predictions against gold texts (JSONL of {case_id, text})."""
    try:
        from kom.evaluation.text import bleu, corpus_bleu, corpus_rouge_l, rouge_l, semantic_similarity

        preds = {r["case_id"]: r["text"] for r in _read_jsonl(pred_path)}
        gold = {r["case_id"]: r["text"] for r in _read_jsonl(gold_path)}
        shared = sorted(set(preds) & set(gold))
        if not shared:
            raise ValueError("no overlapping case ids")
        pairs = [(preds[c], gold[c]) for c in shared]
        per_case = {
            c: {
                "bleu": bleu(preds[c], gold[c], smoothing=True),
                "rouge_l": rouge_l(preds[c], gold[c]),
                "semantic": semantic_similarity(preds[c], gold[c]),
            }
            for c in shared
        }
        result = {
            "corpus": {
                "bleu": corpus_bleu(pairs, smoothing=True),
                "rouge_l": corpus_rouge_l(pairs),
            },
            "sentence_mean": {
                metric: sum(v[metric] for v in per_case.values()) / len(per_case)
                for metric in ("bleu", "rouge_l", "semantic")
            },
            "per_case": per_case,
        }
        click.echo(json.dumps(result, indent=2, sort_keys=True))
    except Exception as exc:
        _fail(exc)


def _run_three_arm_config(config_path: str) -> dict:
    import yaml

    from kom.evaluation.threearm import ArmConfig, run_three_arm, scripted_processor, scripted_timer

    payload = yaml.safe_load(Path(config_path).read_text())
    base = Path(config_path).parent

    def resolve(p):
        path = Path(p)
        return path if path.is_absolute() else base / path

    cases = _read_jsonl(resolve(payload["cases"]))
    gold = None
    if payload.get("gold"):
        gold = {r["case_id"]: r["text"] for r in _read_jsonl(resolve(payload["gold"]))}
    arms = []
    for arm in payload["arms"]:
        outputs = {r["case_id"]: r for r in _read_jsonl(resolve(arm["outputs"]))}
        timer = scripted_timer(arm["times"]) if arm.get("times") else None
        rubric_rows = _read_jsonl(resolve(arm["rubric"])) if arm.get("rubric") else []
        arms.append(
            ArmConfig(
                name=arm["name"],
                processor=scripted_processor(outputs),
                timer=timer,
                rubric_rows=rubric_rows,
            )
        )
    return run_three_arm(cases, arms, seed=int(payload.get("seed", 0)), gold=gold)


@eval_group.command("three-arm")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def eval_three_arm(config_path):
    """Run the arm-comparison harness from a YAML config."""
    try:
        click.echo(json.dumps(_run_three_arm_config(config_path), indent=2, sort_keys=True))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=".")
def simulate(config_path, out_dir):
    """Run the arm comparison and write ArmResult CSV + JSON summary."""
    try:
        import csv

        result = _run_three_arm_config(config_path)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "arm_results.csv"
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["arm", "n_cases", "approval_rate", "time_mean", "time_sd",
                 "bleu_corpus", "rouge_l_corpus", "semantic_mean", "rubric_composite"]
            )
            for name, arm in result["arms"].items():
                sim = arm["similarity"] or {}
                rubric = arm["rubric"] or {}
                writer.writerow(
                    [
                        name,
                        arm["n_cases"],
                        arm["approval_rate"],
                        arm["time_mean"],
                        arm["time_sd"],
                        sim.get("bleu_corpus"),
                        sim.get("rouge_l_corpus"),
                        sim.get("semantic_mean"),
                        rubric.get("composite"),
                    ]
                )
        (out / "arm_results.json").write_text(json.dumps(result, indent=2, sort_keys=True))
        click.echo(f"wrote {csv_path}")
    except Exception as exc:
        _fail(exc)


# -- service -------------------------------------------------------------------
@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "data_dir", type=click.Path(), default=None,
              help="Defaults to KOM_DATA_DIR.")
@click.option("--seed", type=int, default=None, help="Defaults to KOM_SEED.")
def serve(port, host, data_dir, seed):
    """Serve the HTTP API (requires uvicorn)."""
    try:
        import os
        import socket

        import uvicorn

        from kom.service.api import create_app
        from kom.service.backend import MockBackend

        if data_dir is None:
            data_dir = os.environ.get("KOM_DATA_DIR")
        if seed is None:
            seed = int(os.environ.get("KOM_SEED", "0"))
        if port == 0:
            probe = socket.socket()
            probe.bind((host, 0))
            port = probe.getsockname()[1]
            probe.close()
        click.echo(f"listening on {host}:{port}")
        app = create_app(backend=MockBackend(seed=seed), data_dir=data_dir)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except Exception as exc:
        _fail(exc)


# -- train alias ------------------------------------------------------------------
@main.command()
@click.option("--kind", type=click.Choice(["imaging-localizer", "imaging-classifier", "risk"]),
              required=True)
@click.pass_context
def train(ctx, kind):
    """Alias: points at the module-specific train commands."""
    mapping = {
        "imaging-localizer": "kom imaging train --task localizer ...",
        "imaging-classifier": "kom imaging train --task severity ...",
        "risk": "kom risk train --task <target> ...",
    }
    click.echo(f"use `{mapping[kind]}`")


if __name__ == "__main__":
    main()
