import os

from dotenv import load_dotenv

load_dotenv()

PROJECT_TITLE = "Radicalign"
PROJECT_VERSION = "1.0"

# ids_core
RADICAL_COUNT = 24
MAX_TREE_DEPTH = 3
STROKE_CATEGORIES = ("heng", "shu", "pie", "dian", "zhe")
STROKE_INSTANCES = 4
LEXICON_FILE = "lexicon.tsv"
STROKES_FILE = "strokes.tsv"

# glyph_forge
RADICAL_SIZE = 16
GLYPH_SIZE = 32
LINE_WIDTH = 256
MAX_LINE_LENGTH = 8
PLACEMENT_JITTER = 2
ENC_CENTER_FRACTION = 0.6
MANIFEST_FILE = "manifest.tsv"
META_FILE = "meta.tsv"
IMAGES_DIR = "images"
SYNTH_THREADS = int(os.environ.get("RADICALIGN_THREADS", "4"))

# tensor_substrate
CHECKPOINT_MAGIC = b"RADCKPT\x00"
CHECKPOINT_VERSION = 1
MASK_VALUE = -1e9
LAYER_NORM_EPS = 1e-5

# clip_align
EMBED_DIM = 64
IMAGE_WIDTHS = (16, 32, 64, 64)
TEXT_DIM = 64
TEXT_LAYERS = 2
ATTENTION_HEADS = 4
MAX_SEQUENCE_LENGTH = 24
BATCH_SIZE = 64
LEARNING_RATE = 1e-4
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.98
ADAM_EPS = 1e-8
LAMBDA = 1.0
LOGIT_SCALE = 1.0
CANDIDATES_FILE = "candidates.tsv"
EMBEDDINGS_FILE = "embeddings.tsv"

# ctr_recognizer
CTR_WIDTHS = (16, 32, 64)
DECODER_LAYERS = 2
BETA = 0.001
MAX_DECODE_LENGTH = 10
CTR_CHECKPOINT_FILE = "ctr.ckpt"
PREDICTIONS_FILE = "predictions.tsv"

# eval_bench
FEW_SHOT_LIMIT = 50
TIMING_BATCH_SIZE = 32
LAMBDA_GRID = (0.0, 0.5, 1.0, 2.0, 5.0)
BETA_GRID = (0.0, 0.001, 0.01, 0.1, 1.0)
REPORT_FILE = "report.tsv"
SUMMARY_FILE = "summary.txt"
SAMPLES_FILE = "samples.csv"
ABLATION_FILE = "ablation.tsv"

# app
CONFIG_FILE = "config.cfg"
RUN_MANIFEST_FILE = "manifest.json"
LOCK_FILE = ".lock"
CHECKPOINT_FILE = "model.ckpt"
TRAIN_LOG_FILE = "train_log.tsv"
