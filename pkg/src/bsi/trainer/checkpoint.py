'''
Checkpoint file

    magic    8 bytes  b'BSICKPT1'
    length   u32 LE   size of the metadata
    metadata utf-8 JSON, sorted keys
    params   f64 LE * params_length
    ema      f64 LE * ema_length
'''
from typing import NamedTuple
import json
import logging
import pathlib
import struct
import numpy as np
from ..errors import CheckpointFormatError, BsiException
from ..formats import BytesReader
from ..predictor import Predictor, PredictorSpec

LOGGER = logging.getLogger(__name__)

MAGIC = b'BSICKPT1'
VERSION = 1


class Checkpoint(NamedTuple):
    spec: PredictorSpec
    lambda0: float
    lambda_m: float
    alpha_r: float
    params: np.ndarray
    ema: np.ndarray
    step: int
    seed: int

    def predictor(self, use_ema: bool = True) -> Predictor:
        return Predictor(self.spec, self.ema if use_ema else self.params)

    def metadata(self) -> dict:
        return {
            'version': VERSION,
            'spec': self.spec.to_json(),
            'schedule': {
                'lambda0': self.lambda0,
                'lambda_m': self.lambda_m,
                'alpha_r': self.alpha_r,
            },
            'step': self.step,
            'seed': self.seed,
            'params_length': len(self.params),
            'ema_length': len(self.ema),
        }

    def to_bytes(self) -> bytes:
        meta = json.dumps(self.metadata(), sort_keys=True, separators=(',', ':')).encode('utf-8')
        return b''.join([
            MAGIC,
            struct.pack('<I', len(meta)),
            meta,
            np.asarray(self.params, dtype='<f8').tobytes(),
            np.asarray(self.ema, dtype='<f8').tobytes(),
        ])

    @staticmethod
    def from_bytes(data: bytes) -> 'Checkpoint':
        r = BytesReader(data)
        magic = r.bytes(len(MAGIC), 'magic')
        if magic != MAGIC:
            if magic[:7] == MAGIC[:7]:
                raise CheckpointFormatError(f'unsupported checkpoint version {magic[7:]!r}', 7)
            raise CheckpointFormatError(f'bad magic {magic!r}', 0)
        length = r.uint32('metadata length')
        meta_offset = r.pos
        try:
            meta = json.loads(r.str(length, 'metadata'))
        except json.JSONDecodeError as ex:
            raise CheckpointFormatError(f'metadata: {ex.msg}', meta_offset + ex.pos)
        if meta.get('version') != VERSION:
            raise CheckpointFormatError(f'unsupported metadata version {meta.get("version")}', meta_offset)
        try:
            spec = PredictorSpec.from_json(meta['spec'])
            schedule = meta['schedule']
            params_length = int(meta['params_length'])
            ema_length = int(meta['ema_length'])
        except (KeyError, TypeError, ValueError, BsiException) as ex:
            raise CheckpointFormatError(f'metadata: {ex}', meta_offset)

        # lengths are checked before any float is read
        if params_length != spec.param_count or ema_length != spec.param_count:
            raise CheckpointFormatError(
                f'array lengths {params_length}/{ema_length} do not match spec ({spec.param_count})', meta_offset)
        params = r.float64_array(params_length, 'params')
        ema = r.float64_array(ema_length, 'ema')
        if r.remaining:
            raise CheckpointFormatError(f'{r.remaining} trailing bytes', r.pos)
        return Checkpoint(spec, float(schedule['lambda0']), float(schedule['lambda_m']),
                          float(schedule['alpha_r']), params, ema, int(meta['step']), int(meta['seed']))


def save_checkpoint(path: pathlib.Path, checkpoint: Checkpoint):
    path = pathlib.Path(path)
    path.write_bytes(checkpoint.to_bytes())
    LOGGER.info(f'save {path} (step {checkpoint.step}, {len(checkpoint.params)} params)')


def load_checkpoint(path: pathlib.Path) -> Checkpoint:
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as ex:
        raise CheckpointFormatError(f'{path}: {ex.strerror}', 0)
    checkpoint = Checkpoint.from_bytes(data)
    LOGGER.debug(f'load {path} (step {checkpoint.step})')
    return checkpoint