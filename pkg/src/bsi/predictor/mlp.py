'''
Tiny fully-connected network with a hand-written backward pass.

Parameters live in one flat float64 vector, layer after layer, each layer as
W (in x out, row major) followed by b (out).
'''
from typing import List, NamedTuple, Tuple
import math
import numpy as np
from scipy.special import expit
from ..errors import ContractViolation


def silu(x: np.ndarray) -> np.ndarray:
    return x * expit(x)


def silu_grad(x: np.ndarray) -> np.ndarray:
    s = expit(x)
    return s * (1.0 + x * (1.0 - s))


class MlpLayout(NamedTuple):
    in_dim: int
    width: int
    depth: int
    out_dim: int

    def shapes(self) -> List[Tuple[int, int]]:
        dims = [self.in_dim] + [self.width] * self.depth + [self.out_dim]
        return list(zip(dims[:-1], dims[1:]))

    @property
    def size(self) -> int:
        return sum(i * o + o for i, o in self.shapes())

    def unpack(self, params: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        if params.shape != (self.size,):
            raise ContractViolation(f'parameter vector {params.shape} != ({self.size},)')
        layers = []
        pos = 0
        for i, o in self.shapes():
            w = params[pos:pos + i * o].reshape(i, o)
            pos += i * o
            b = params[pos:pos + o]
            pos += o
            layers.append((w, b))
        return layers

    def weight_mask(self) -> np.ndarray:
        '''
        1.0 on weight entries, 0.0 on biases
        '''
        return np.concatenate([np.concatenate([np.ones(i * o), np.zeros(o)]) for i, o in self.shapes()])

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        '''
        uniform(+-1/sqrt(in)) for hidden layers, zeros for the output layer
        '''
        chunks = []
        shapes = self.shapes()
        for n, (i, o) in enumerate(shapes):
            if n == len(shapes) - 1:
                chunks.append(np.zeros(i * o + o))
            else:
                limit = 1.0 / math.sqrt(i)
                chunks.append(rng.uniform(-limit, limit, i * o))
                chunks.append(np.zeros(o))
        return np.concatenate(chunks)


class MlpCache(NamedTuple):
    inputs: List[np.ndarray]
    pre: List[np.ndarray]


def mlp_forward(layout: MlpLayout, params: np.ndarray, features: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
    layers = layout.unpack(params)
    h = features
    inputs = []
    pre = []
    for n, (w, b) in enumerate(layers):
        inputs.append(h)
        z = h @ w + b
        if n == len(layers) - 1:
            return z, MlpCache(inputs, pre)
        pre.append(z)
        h = silu(z)
    raise ContractViolation('empty network')


def mlp_backward(layout: MlpLayout, params: np.ndarray, cache: MlpCache, grad_out: np.ndarray) -> np.ndarray:
    '''
    gradient of sum(grad_out * output) with respect to params, summed over rows
    '''
    layers = layout.unpack(params)
    grads: List[np.ndarray] = [np.empty(0)] * (2 * len(layers))
    g = grad_out
    for n in range(len(layers) - 1, -1, -1):
        w, _ = layers[n]
        x = cache.inputs[n]
        grads[2 * n] = (x.T @ g).ravel()
        grads[2 * n + 1] = g.sum(axis=0)
        if n > 0:
            g = (g @ w.T) * silu_grad(cache.pre[n - 1])
    return np.concatenate(grads)
