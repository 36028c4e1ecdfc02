from eval_bench.exceptions import DegenerateSplit, EvalError, LengthMismatch, SplitOverflow
from eval_bench.metrics import (align, cacc, character_accuracy, edit_distance, few_shot_report, lacc, ned,
                                shot_bucket)
from eval_bench.splits import Split, make_char_zero_shot_split, make_radical_zero_shot_split, split_classes
