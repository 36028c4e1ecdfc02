import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Sequence, Union

import conf
from eval_bench.exceptions import EvalError
from eval_bench.pipeline import (Datasets, candidates_stage, ctr_stage, evaluate_glyphs, evaluate_lines,
                                 pretrain_stage)
from ids_core import Lexicon
from models import AblationParam, DecompositionLevel, HeadMode, MetricsReport, RunConfig

logger = logging.getLogger(__name__)

# parameters that change the pre-trained encoders; the others only change the recognizer
PRETRAIN_PARAMS = (AblationParam.lam, AblationParam.level)
COLUMNS = ("cacc", "lacc", "ned", "seen_cacc", "unseen_cacc", "samples", "truncated")
_TRUE = {"1", "true", "on", "yes"}
_FALSE = {"0", "false", "off", "no"}
DEFAULT_VALUES = {
    AblationParam.lam: tuple(str(v) for v in conf.LAMBDA_GRID),
    AblationParam.beta: tuple(str(v) for v in conf.BETA_GRID),
    AblationParam.head_mode: tuple(mode.value for mode in HeadMode),
    AblationParam.reg_term: ("on", "off"),
    AblationParam.level: tuple(level.value for level in DecompositionLevel),
}


@dataclass
class AblationRow:
    value: Any
    report: MetricsReport

    @property
    def label(self) -> str:
        return self.value.value if hasattr(self.value, "value") else str(self.value)


@dataclass
class AblationTable:
    param: AblationParam
    rows: List[AblationRow] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["\t".join(("param", "value") + COLUMNS)]
        for row in self.rows:
            cells = [self.param.value, row.label]
            for column in COLUMNS:
                value = getattr(row.report, column)
                cells.append("-" if value is None else (repr(value) if isinstance(value, float) else str(value)))
            lines.append("\t".join(cells))
        lines += [f"# WARNING: {warning}" for warning in self.warnings]
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]):
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


def parse_value(param: AblationParam, text: Any) -> Any:
    """
    Typed value of an ablation setting given on the command line.

    :raises EvalError: if the text is not a valid value for ``param``.
    """
    if not isinstance(text, str):
        return text
    try:
        if param in (AblationParam.lam, AblationParam.beta):
            return float(text)
        if param == AblationParam.head_mode:
            return HeadMode(text)
        if param == AblationParam.level:
            return DecompositionLevel(text)
    except ValueError as e:
        raise EvalError(f"invalid {param.value} value {text!r}") from e
    flag = text.strip().lower()
    if flag not in _TRUE | _FALSE:
        raise EvalError(f"invalid {param.value} value {text!r}; use on or off")
    return flag in _TRUE


def apply_value(config: RunConfig, param: AblationParam, value: Any) -> RunConfig:
    if param == AblationParam.lam:
        return config.model_copy(update={"pretrain": config.pretrain.model_copy(update={"lam": value})})
    if param == AblationParam.level:
        return config.model_copy(update={"pretrain": config.pretrain.model_copy(update={"level": value})})
    if param == AblationParam.beta:
        update = {"beta": value}
    elif param == AblationParam.head_mode:
        update = {"head_mode": value}
    else:
        update = {"beta": config.ctr.beta if value else 0.0}
    return config.model_copy(update={"ctr": config.ctr.model_copy(update=update)})


def lambda_gate(rows: Sequence[AblationRow]) -> Optional[str]:
    """Warning when image-image supervision lowers unseen-class accuracy."""
    by_value = {float(row.value): row.report.unseen_cacc for row in rows}
    with_li, without_li = by_value.get(1.0), by_value.get(0.0)
    if with_li is None or without_li is None or with_li >= without_li:
        return None
    return f"unseen CACC with lambda=1 ({with_li:.4f}) is below lambda=0 ({without_li:.4f})"


def _require(data: Datasets, *names: str):
    missing = [name for name in names if getattr(data, name) is None]
    if missing:
        raise EvalError(f"ablation needs datasets: {', '.join(missing)}")


def ablation_sweep(param: Union[str, AblationParam], values: Optional[Sequence[Any]], config: RunConfig,
                   lex: Lexicon, data: Datasets, seed: int) -> AblationTable:
    """
    One training and evaluation run per value of ``param`` under the same seed.

    ``lambda`` and ``level`` retrain the encoders and report glyph accuracy;
    ``beta``, ``head_mode`` and ``reg_term`` share one pre-trained model and
    report line metrics of the recognizer.
    Without ``values`` the standard grid of the parameter is swept.

    :raises EvalError: if ``values`` is empty or a needed dataset is missing.
    """
    param = AblationParam(param)
    if values is None:
        values = DEFAULT_VALUES[param]
    if not values:
        raise EvalError("an ablation needs at least one value")
    if param in PRETRAIN_PARAMS:
        _require(data, "glyph_train", "glyph_test")
    else:
        _require(data, "glyph_train", "line_train", "line_test")
    table = AblationTable(param)
    shared = None
    for raw in values:
        value = parse_value(param, raw)
        run = apply_value(config, param, value)
        logger.info(f"ablation {param.value}={raw}")
        if param in PRETRAIN_PARAMS:
            clip, _ = pretrain_stage(run, lex, data.glyph_train, seed)
            report = evaluate_glyphs(run, lex, clip, candidates_stage(clip, lex), data.glyph_test)
        else:
            if shared is None:
                clip, _ = pretrain_stage(run, lex, data.glyph_train, seed)
                shared = clip, candidates_stage(clip, lex)
            clip, candidates = shared
            recognizer, _ = ctr_stage(run, lex, candidates, data.line_train, seed, clip)
            report = evaluate_lines(run, lex, recognizer, data.line_test, data.line_train)
        table.rows.append(AblationRow(value, report))
    if param == AblationParam.lam:
        warning = lambda_gate(table.rows)
        if warning:
            logger.warning(warning)
            table.warnings.append(warning)
    return table
