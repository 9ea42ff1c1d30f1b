from .epdms import (
    HEADER,
    CorpusScore,
    corpus_epdms,
    epdms,
    evaluate,
    filter,
    filtered_scores,
    report_row,
    summary_row,
)
from .models import PENALTIES, REPORT_ORDER, WEIGHTED, EpdmsConfig, EpdmsReport, SubScoreId
from .subscores import all_subscores, subscore

__all__ = [
    "HEADER",
    "PENALTIES",
    "REPORT_ORDER",
    "WEIGHTED",
    "CorpusScore",
    "EpdmsConfig",
    "EpdmsReport",
    "SubScoreId",
    "all_subscores",
    "corpus_epdms",
    "epdms",
    "evaluate",
    "filter",
    "filtered_scores",
    "report_row",
    "subscore",
    "summary_row",
]
