from .bytesreader import BytesReader

__all__ = ['BytesReader']
