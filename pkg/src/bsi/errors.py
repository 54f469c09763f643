from typing import Optional, Sequence


class BsiException(RuntimeError):
    pass


class DomainError(BsiException):
    '''
    numeric argument outside its mathematical domain
    '''
    pass


class ContractViolation(BsiException):
    '''
    shape or size mismatch between arguments
    '''
    pass


class UnsupportedOperation(BsiException):
    pass


class UsageError(BsiException):
    pass


class CheckpointFormatError(BsiException):
    def __init__(self, message: str, offset: int, missing: Optional[int] = None) -> None:
        self.offset = offset
        self.missing = missing
        if missing is not None:
            message = f'{message}: {missing} bytes missing'
        super().__init__(f'{message} (offset {offset})')


class TrainingAborted(BsiException):
    def __init__(self, step: int, loss: float, lambdas: Sequence[float], param_norm: float) -> None:
        self.step = step
        self.loss = loss
        self.lambdas = list(lambdas)
        self.param_norm = param_norm
        lo = min(self.lambdas) if self.lambdas else float('nan')
        hi = max(self.lambdas) if self.lambdas else float('nan')
        super().__init__(
            f'non-finite loss {loss} at step {step}: '
            f'lambda in [{lo:g}, {hi:g}], |params| = {param_norm:g}')


def check_precision(name: str, value: float):
    if not (value > 0 and value < float('inf')):
        raise DomainError(f'{name} must be positive and finite: {value}')
