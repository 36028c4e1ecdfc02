from ctr_recognizer.decoding import DecodeResult, add_candidate, greedy_decode, write_predictions
from ctr_recognizer.exceptions import CandidateMissing, CtrError, DimensionMismatch, LabelOutOfRange
from ctr_recognizer.heads import PAD_TARGET, ctr_loss, match_logits, matching_head
from ctr_recognizer.model import BOS_CODE, PAD_CODE, CtrEncoder, CtrModel
from ctr_recognizer.training import CtrEpoch, CtrLog, batch_loss, teacher_forcing, train_ctr
