from commands.finetune import finetune
from commands.preprocess import preprocess
from commands.pretrain import pretrain
from commands.report import report
from commands.sample_noise import sample_noise
from commands.verify import verify

COMMANDS = (preprocess, pretrain, finetune, verify, sample_noise, report)

__all__ = ["COMMANDS", "finetune", "preprocess", "pretrain", "report", "sample_noise", "verify"]
