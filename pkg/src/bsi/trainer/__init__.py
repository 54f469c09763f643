from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint
from .ema import ema_update
from .optimizer import AdamW
from .train import LrDecay, TrainConfig, MetricsRow, train, batch_loss, batch_loss_and_grad

__all__ = [
    'Checkpoint', 'save_checkpoint', 'load_checkpoint', 'ema_update', 'AdamW',
    'LrDecay', 'TrainConfig', 'MetricsRow', 'train', 'batch_loss', 'batch_loss_and_grad',
]
