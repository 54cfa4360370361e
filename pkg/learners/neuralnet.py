import numpy as np
from enum import Enum
from pathlib import Path
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union


__all__ = [
    "Activation",
    "NetworkParams",
    "OptimizerState",
    "param_count",
    "init_params",
    "forward",
    "backward",
    "optimizer_step",
    "numeric_gradient",
    "save_params",
    "load_params",
    "CHECKPOINT_VERSION"
]


CHECKPOINT_VERSION = 1


class Activation(Enum):
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"


def param_count(layer_sizes: Sequence[int]) -> int:
    return int(sum((n_in + 1) * n_out for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:])))


@dataclass
class NetworkParams:
    """
    Fully connected network stored as one flat float64 vector.

    Layer `l` occupies `W_l` (out x in, row-major) followed by `b_l` (out);
    hidden layers use ReLU and the last layer `output_activation`.
    """
    layer_sizes: Tuple[int, ...]
    vector: np.ndarray
    output_activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError(f"Invalid layer sizes {self.layer_sizes}")
        self.vector = np.asarray(self.vector, dtype=np.float64)
        expected = param_count(self.layer_sizes)
        if self.vector.shape != (expected,):
            raise ValueError(
                f"Parameter vector of shape {self.vector.shape} does not fit "
                f"layers {self.layer_sizes} ({expected} parameters)"
            )
        self.output_activation = Activation(self.output_activation)

    @property
    def n_params(self) -> int:
        return self.vector.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    def layer_slices(self) -> List[Tuple[slice, slice]]:
        """
        (weight slice, bias slice) into `vector` for every layer.
        """
        slices, offset = list(), 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            w = slice(offset, offset + n_in * n_out)
            offset += n_in * n_out
            b = slice(offset, offset + n_out)
            offset += n_out
            slices.append((w, b))
        return slices

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """
        Views (W, b) into the flat vector; writes go through to `vector`.
        """
        shapes = zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        return [
            (self.vector[w].reshape(n_out, n_in), self.vector[b])
            for (w, b), (n_in, n_out) in zip(self.layer_slices(), shapes)
        ]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            layer_sizes=self.layer_sizes,
            vector=self.vector.copy(),
            output_activation=self.output_activation
        )

    def with_vector(self, vector: np.ndarray) -> "NetworkParams":
        return NetworkParams(
            layer_sizes=self.layer_sizes,
            vector=np.array(vector, dtype=np.float64),
            output_activation=self.output_activation
        )

    def to_arrays(self, prefix: str) -> Dict[str, np.ndarray]:
        return {
            f"{prefix}.layer_sizes": np.asarray(self.layer_sizes, dtype=np.int64),
            f"{prefix}.vector": self.vector,
            f"{prefix}.output_activation": np.asarray(self.output_activation.value)
        }

    @classmethod
    def from_arrays(cls, arrays, prefix: str) -> "NetworkParams":
        try:
            return cls(
                layer_sizes=tuple(arrays[f"{prefix}.layer_sizes"].tolist()),
                vector=np.array(arrays[f"{prefix}.vector"]),
                output_activation=Activation(str(arrays[f"{prefix}.output_activation"]))
            )
        except KeyError as exc:
            raise ValueError(f"Checkpoint lacks network `{prefix}`: {exc}")


def init_params(
        layer_sizes: Sequence[int],
        rng: np.random.Generator,
        output_activation: Optional[Activation] = Activation.IDENTITY
) -> NetworkParams:
    """
    Uniform initialization in +-1/sqrt(fan_in) for weights and biases alike.
    """
    if len(layer_sizes) < 2 or min(layer_sizes) < 1:
        raise ValueError(f"Invalid layer sizes {tuple(layer_sizes)}")
    chunks = list()
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        chunks.append(rng.uniform(-bound, bound, size=n_in * n_out))
        chunks.append(rng.uniform(-bound, bound, size=n_out))
    return NetworkParams(
        layer_sizes=tuple(layer_sizes),
        vector=np.concatenate(chunks),
        output_activation=output_activation
    )


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    if activation is Activation.TANH:
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (z > 0).astype(np.float64)
    if activation is Activation.TANH:
        return 1.0 - a ** 2
    return np.ones_like(z)


def _as_batch(params: NetworkParams, x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != params.n_inputs:
        raise ValueError(
            f"Network expects inputs of width {params.n_inputs}, got shape {x.shape}"
        )
    return batch, single


def _forward_cache(params: NetworkParams, batch: np.ndarray):
    layers = params.layers()
    pre, post = list(), [batch]
    a = batch
    for idx, (w, b) in enumerate(layers):
        z = a @ w.T + b
        activation = params.output_activation if idx == len(layers) - 1 else Activation.RELU
        a = _activate(z, activation)
        pre.append(z)
        post.append(a)
    return pre, post


def forward(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """
    Evaluate the network on one input vector or a (batch, inputs) matrix.
    """
    batch, single = _as_batch(params, x)
    out = _forward_cache(params, batch)[1][-1]
    return out[0] if single else out


def backward(
        params: NetworkParams,
        x: np.ndarray,
        output_gradient: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reverse-mode gradient of `sum(output_gradient * forward(params, x))`.

    Args:
        params (NetworkParams): Network.
        x (np.ndarray): Input vector or batch.
        output_gradient (np.ndarray): Upstream gradient, same shape as the
            network output for `x`.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Gradient w.r.t. the flat parameter
            vector (summed over the batch) and w.r.t. the input.
    """
    batch, single = _as_batch(params, x)
    upstream = np.asarray(output_gradient, dtype=np.float64)
    upstream = upstream[None, :] if single else upstream
    if upstream.shape != (batch.shape[0], params.n_outputs):
        raise ValueError(
            f"Output gradient of shape {np.shape(output_gradient)} does not "
            f"match network output width {params.n_outputs}"
        )
    pre, post = _forward_cache(params, batch)
    layers = params.layers()
    grad = np.zeros_like(params.vector)
    delta = upstream
    for idx in range(len(layers) - 1, -1, -1):
        w, _ = layers[idx]
        activation = params.output_activation if idx == len(layers) - 1 else Activation.RELU
        delta = delta * _activation_grad(pre[idx], post[idx + 1], activation)
        w_slice, b_slice = params.layer_slices()[idx]
        grad[w_slice] = (delta.T @ post[idx]).ravel()
        grad[b_slice] = delta.sum(axis=0)
        delta = delta @ w
    return grad, (delta[0] if single else delta)


@dataclass
class OptimizerState:
    """
    Adam moments of one network.
    """
    lr: float
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: NetworkParams, lr: float) -> "OptimizerState":
        if lr <= 0:
            raise ValueError(f"Learning rate must be positive, got {lr}")
        return cls(lr=lr, m=np.zeros(params.n_params), v=np.zeros(params.n_params))

    def to_arrays(self, prefix: str) -> Dict[str, np.ndarray]:
        return {
            f"{prefix}.m": self.m,
            f"{prefix}.v": self.v,
            f"{prefix}.scalars": np.array(
                [self.lr, self.t, self.beta1, self.beta2, self.eps], dtype=np.float64
            )
        }

    @classmethod
    def from_arrays(cls, arrays, prefix: str) -> "OptimizerState":
        try:
            lr, t, beta1, beta2, eps = arrays[f"{prefix}.scalars"].tolist()
            return cls(
                lr=lr,
                m=np.array(arrays[f"{prefix}.m"]),
                v=np.array(arrays[f"{prefix}.v"]),
                t=int(t),
                beta1=beta1,
                beta2=beta2,
                eps=eps
            )
        except KeyError as exc:
            raise ValueError(f"Checkpoint lacks optimizer `{prefix}`: {exc}")


def optimizer_step(
        opt: OptimizerState,
        params: NetworkParams,
        grads: np.ndarray
) -> NetworkParams:
    """
    One bias-corrected Adam descent step; updates `opt` in place and returns
    new parameters.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.vector.shape or opt.m.shape != params.vector.shape:
        raise ValueError(
            f"Gradient {grads.shape} / moments {opt.m.shape} do not match "
            f"parameters {params.vector.shape}"
        )
    opt.t += 1
    opt.m = opt.beta1 * opt.m + (1 - opt.beta1) * grads
    opt.v = opt.beta2 * opt.v + (1 - opt.beta2) * grads ** 2
    m_hat = opt.m / (1 - opt.beta1 ** opt.t)
    v_hat = opt.v / (1 - opt.beta2 ** opt.t)
    return params.with_vector(params.vector - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps))


def numeric_gradient(
        fn: Callable[[np.ndarray], float],
        x: np.ndarray,
        h: Optional[float] = 1e-5
) -> np.ndarray:
    """
    Central finite differences of a scalar function.
    """
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        orig = x.flat[i]
        x.flat[i] = orig + h
        upper = fn(x)
        x.flat[i] = orig - h
        lower = fn(x)
        x.flat[i] = orig
        grad.flat[i] = (upper - lower) / (2 * h)
    return grad


def save_params(
        dst_path: Union[str, Path],
        params: NetworkParams,
        opt: Optional[OptimizerState] = None
) -> Path:
    dst_path = Path(dst_path).expanduser().absolute()
    arrays = {"version": np.asarray(CHECKPOINT_VERSION)}
    arrays.update(params.to_arrays("net"))
    if opt is not None:
        arrays.update(opt.to_arrays("opt"))
    with open(dst_path, mode="wb") as dst:
        np.savez(dst, **arrays)
    return dst_path


def load_params(
        src_path: Union[str, Path]
) -> Tuple[NetworkParams, Optional[OptimizerState]]:
    with np.load(Path(src_path).expanduser(), allow_pickle=False) as arrays:
        version = int(arrays["version"]) if "version" in arrays else None
        if version != CHECKPOINT_VERSION:
            raise ValueError(
                f"Unsupported network checkpoint version {version} in {src_path}"
            )
        params = NetworkParams.from_arrays(arrays, "net")
        opt = OptimizerState.from_arrays(arrays, "opt") if "opt.m" in arrays else None
    return params, opt
