'''
little-endian reader for the checkpoint and sample files
'''
import struct
import numpy as np
from ..errors import CheckpointFormatError


class BytesReader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def bytes(self, length: int, what: str = 'data') -> bytes:
        if length > self.remaining:
            raise CheckpointFormatError(f'truncated {what}', self.pos, length - self.remaining)
        data = self.data[self.pos:self.pos+length]
        self.pos += length
        return data

    def str(self, length: int, what: str = 'text') -> str:
        data = self.bytes(length, what)
        try:
            return data.decode('utf-8')
        except UnicodeDecodeError as ex:
            raise CheckpointFormatError(f'{what} is not utf-8', self.pos - length + ex.start)

    def uint32(self, what: str = 'uint32') -> int:
        return struct.unpack('<I', self.bytes(4, what))[0]

    def uint64(self, what: str = 'uint64') -> int:
        return struct.unpack('<Q', self.bytes(8, what))[0]

    def float64_array(self, count: int, what: str = 'float64 array') -> np.ndarray:
        return np.frombuffer(self.bytes(8 * count, what), dtype='<f8').astype(np.float64)
