from clip_align.candidates import CandidateMatrix, ccr_recognize
from clip_align.encoders import ImageEncoder, TextEncoder, encode_token_batch
from clip_align.exceptions import ClipError, DuplicateClass, EmptyCandidates, EmptyDataset, SequenceTooLong, UnknownToken
from clip_align.losses import loss_li, loss_lt, pretrain_loss
from clip_align.model import ClipModel, export_candidates, mean_intra_class_cosine
from clip_align.training import PretrainEpoch, PretrainLog, class_batches, pretrain
