"""Retrieval precision/recall/F1 and answer token-overlap scoring."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyGoldSetError, EmptyRelevantError
from .vecstore import VectorStore


@dataclass(frozen=True)
class RetrievalCounts:
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class PrfScores:
    precision: float
    recall: float
    f1: float


@dataclass
class GoldItem:
    question: str
    relevant: list[str]  # chunk ids or structure paths
    gold_answer: str | None = None


@dataclass
class QuestionResult:
    question: str
    scores: PrfScores
    answer_f1: float | None = None


@dataclass
class EvalReport:
    per_question: list[QuestionResult]
    macro: PrfScores
    skipped: int
    config: dict = field(default_factory=dict)


def retrieval_counts(retrieved, relevant) -> RetrievalCounts:
    retrieved_set = set(retrieved)
    relevant_set = set(relevant)
    return RetrievalCounts(
        tp=len(retrieved_set & relevant_set),
        fp=len(retrieved_set - relevant_set),
        fn=len(relevant_set - retrieved_set),
    )


def retrieval_prf(retrieved, relevant) -> PrfScores:
    """Set-based precision/recall/F1 of retrieved ids against the relevant set."""
    relevant_set = set(relevant)
    if not relevant_set:
        raise EmptyRelevantError("relevant set is empty; skip this question")
    counts = retrieval_counts(retrieved, relevant_set)
    retrieved_total = counts.tp + counts.fp
    precision = counts.tp / retrieved_total if retrieved_total else 0.0
    recall = counts.tp / (counts.tp + counts.fn)
    if precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return PrfScores(precision, recall, f1)


def answer_token_f1(pred: str, gold: str) -> float:
    """Multiset token-overlap F1 over lowercase whitespace tokens."""
    pred_counts = Counter(pred.lower().split())
    gold_counts = Counter(gold.lower().split())
    pred_total = sum(pred_counts.values())
    gold_total = sum(gold_counts.values())
    if pred_total == 0 or gold_total == 0:
        return 0.0
    overlap = sum((pred_counts & gold_counts).values())
    if overlap == 0:
        return 0.0
    precision = overlap / pred_total
    recall = overlap / gold_total
    return 2.0 * precision * recall / (precision + recall)


def load_gold(path: str) -> list[GoldItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            items.append(
                GoldItem(
                    question=str(obj["question"]),
                    relevant=[str(r) for r in obj.get("relevant", [])],
                    gold_answer=obj.get("gold_answer"),
                )
            )
    return items


def resolve_relevant(item: GoldItem, store: VectorStore) -> set[str]:
    """Expand gold entries: known chunk ids pass through, paths expand."""
    resolved: set[str] = set()
    for entry in item.relevant:
        if store.get(entry) is not None:
            resolved.add(entry)
        else:
            resolved.update(store.chunk_ids_for_path(entry))
    return resolved


def run_eval(
    gold: list[GoldItem],
    store: VectorStore,
    embed_cfg,
    rag_cfg,
    k: int,
    model=None,
) -> EvalReport:
    """Retrieve per question, score against the gold set, macro-average."""
    from . import rag  # deferred: rag depends on this module's metrics

    if not gold:
        raise EmptyGoldSetError("gold set is empty")

    per_question: list[QuestionResult] = []
    skipped = 0
    for item in gold:
        relevant = resolve_relevant(item, store)
        if not relevant:
            skipped += 1
            continue
        retrieved = rag.retrieve(
            item.question,
            k,
            rag_cfg.rerank_enabled,
            store,
            embed_cfg,
            model=model,
            max_tokens=rag_cfg.chunk_max_tokens,
        )
        scores = retrieval_prf([c.chunk_id for c in retrieved], relevant)
        answer_f1 = None
        if item.gold_answer is not None and rag_cfg.backend == "stub":
            result = rag.answer(
                item.question, store, embed_cfg, rag_cfg, model=model, k=k
            )
            answer_f1 = answer_token_f1(result.answer, item.gold_answer)
        per_question.append(QuestionResult(item.question, scores, answer_f1))

    if not per_question:
        raise EmptyGoldSetError("every question had an empty relevant set")

    n = len(per_question)
    macro = PrfScores(
        precision=sum(r.scores.precision for r in per_question) / n,
        recall=sum(r.scores.recall for r in per_question) / n,
        f1=sum(r.scores.f1 for r in per_question) / n,
    )
    return EvalReport(per_question, macro, skipped)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "per_question": [
            {
                "question": r.question,
                "precision": r.scores.precision,
                "recall": r.scores.recall,
                "f1": r.scores.f1,
                "answer_f1": r.answer_f1,
            }
            for r in report.per_question
        ],
        "macro": {
            "precision": report.macro.precision,
            "recall": report.macro.recall,
            "f1": report.macro.f1,
        },
        "skipped": report.skipped,
        "config": report.config,
    }


def save_report(report: EvalReport, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
