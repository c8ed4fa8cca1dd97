"""
Small float64 layer library for the sentiment models.

Every layer keeps its parameters and gradients in dicts of numpy arrays keyed by name, caches what
its backward pass needs during forward, and implements backward by hand. Shapes follow the
batch-first convention: sequences are [batch x time x features].
"""
import logging
from abc import ABC, abstractmethod

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from config.model_config import learning_rate, beta1, beta2, epsilon, embedding_init_scale, forget_bias
from utils.exceptions import NonFiniteTensorError, ShapeError

logger = logging.getLogger(__name__)

Tensor = np.ndarray

ACTIVATIONS = ('relu', 'softmax', 'none')
DIRECTIONS = ('forward', 'reverse')


def ensure_finite(name, array):
    """
    Raise when an array holds NaN or Inf.
    """
    if not np.all(np.isfinite(array)):
        raise NonFiniteTensorError(f"Non-finite values in {name}")
    return array


def sigmoid(x):
    # tanh form, no overflow for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def glorot_uniform(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(rng, rows, cols):
    flat = rng.normal(0.0, 1.0, size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q *= np.sign(np.diag(r))
    return q if rows >= cols else q.T


class Layer(ABC):
    def __init__(self, name):
        self.name = name
        self.params = {}
        self.grads = {}
        self._cache = None

    @abstractmethod
    def forward(self, x, training=False, rng=None):
        pass

    @abstractmethod
    def backward(self, grad):
        pass

    def zero_grad(self):
        for key, value in self.params.items():
            self.grads[key] = np.zeros_like(value)

    def set_params(self, **arrays):
        """
        Copy arrays into existing parameters, keeping their identity.
        """
        for key, value in arrays.items():
            if key not in self.params:
                raise KeyError(f"{self.name} has no parameter {key!r}")
            value = np.asarray(value, dtype=np.float64)
            if value.shape != self.params[key].shape:
                raise ShapeError(f"{self.name}.{key}: expected shape {self.params[key].shape}, got {value.shape}")
            np.copyto(self.params[key], value)
        return self

    def parameter_count(self):
        return sum(value.size for value in self.params.values())


class Embedding(Layer):
    def __init__(self, name, max_words, dim, rng):
        super().__init__(name)
        self.max_words = max_words
        self.params['table'] = rng.uniform(-embedding_init_scale, embedding_init_scale, size=(max_words, dim))
        self.zero_grad()

    def forward(self, ids, training=False, rng=None):
        """
        Row lookup; padding rows are looked up like any other.
        :param ids: integer array [B x L]
        :return: [B x L x dim]
        """
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.max_words):
            raise IndexError(f"{self.name}: token id out of range [0, {self.max_words})")
        self._cache = ids
        return self.params['table'][ids]

    def backward(self, grad):
        # repeated ids accumulate
        np.add.at(self.grads['table'], self._cache, grad)
        return None


class Conv1D(Layer):
    """
    Valid 1-D convolution over time followed by ReLU. Kernel shape [kernel_size x in_dim x filters].
    """

    def __init__(self, name, in_dim, filters, kernel_size, rng):
        super().__init__(name)
        self.kernel_size = kernel_size
        self.params['kernel'] = glorot_uniform(rng, kernel_size * in_dim, kernel_size * filters,
                                               (kernel_size, in_dim, filters))
        self.params['bias'] = np.zeros(filters)
        self.zero_grad()

    def forward(self, x, training=False, rng=None):
        batch, length, channels = x.shape
        if length < self.kernel_size:
            raise ShapeError(f"{self.name}: sequence length {length} shorter than kernel size {self.kernel_size}")
        if channels != self.params['kernel'].shape[1]:
            raise ShapeError(f"{self.name}: expected {self.params['kernel'].shape[1]} channels, got {channels}")

        kernel = self.params['kernel']
        steps = length - self.kernel_size + 1
        # sliding windows are [B x T x C x K]; columns are [B x T x (K*C)] to match the flattened kernel
        columns = sliding_window_view(x, self.kernel_size, axis=1).transpose(0, 1, 3, 2)
        columns = columns.reshape(batch, steps, self.kernel_size * channels)
        pre = columns @ kernel.reshape(-1, kernel.shape[2]) + self.params['bias']
        self._cache = (x, columns, pre)
        return np.maximum(pre, 0.0)

    def backward(self, grad):
        x, columns, pre = self._cache
        kernel = self.params['kernel']
        grad_pre = grad * (pre > 0)
        filters = grad_pre.shape[2]
        self.grads['kernel'] += (columns.reshape(-1, columns.shape[2]).T @ grad_pre.reshape(-1, filters)).reshape(
            kernel.shape)
        self.grads['bias'] += grad_pre.sum(axis=(0, 1))

        steps = grad_pre.shape[1]
        grad_x = np.zeros_like(x)
        for offset in range(self.kernel_size):
            grad_x[:, offset:offset + steps, :] += grad_pre @ self.params['kernel'][offset].T
        return grad_x


class GlobalMaxPool(Layer):
    def forward(self, x, training=False, rng=None):
        """
        Max over time; ties resolve to the earliest step.
        :param x: [B x T x F]
        :return: [B x F]
        """
        if x.shape[1] < 1:
            raise ShapeError(f"{self.name}: cannot pool an empty time axis")
        argmax = x.argmax(axis=1)
        self._cache = (x.shape, argmax)
        return np.take_along_axis(x, argmax[:, None, :], axis=1)[:, 0, :]

    def backward(self, grad):
        shape, argmax = self._cache
        grad_x = np.zeros(shape)
        np.put_along_axis(grad_x, argmax[:, None, :], grad[:, None, :], axis=1)
        return grad_x


class LSTM(Layer):
    """
    LSTM over a whole sequence, returning every hidden state [B x L x units] in input time order.
    Gates are packed along the last axis in the order input, forget, candidate, output.
    The reverse direction reads the sequence back to front.
    """

    def __init__(self, name, in_dim, units, rng, direction='forward'):
        super().__init__(name)
        if direction not in DIRECTIONS:
            raise ValueError(f"Unknown direction: {direction}")
        self.units = units
        self.direction = direction
        self.params['input_weights'] = glorot_uniform(rng, in_dim, 4 * units, (in_dim, 4 * units))
        self.params['recurrent_weights'] = np.concatenate([orthogonal(rng, units, units) for _ in range(4)], axis=1)
        bias = np.zeros(4 * units)
        bias[units:2 * units] = forget_bias
        self.params['bias'] = bias
        self.zero_grad()

    def forward(self, x, training=False, rng=None):
        batch, length, channels = x.shape
        if channels != self.params['input_weights'].shape[0]:
            raise ShapeError(f"{self.name}: expected {self.params['input_weights'].shape[0]} features, got {channels}")
        if self.direction == 'reverse':
            x = x[:, ::-1, :]

        units = self.units
        w_x, w_h, b = self.params['input_weights'], self.params['recurrent_weights'], self.params['bias']
        projected = x @ w_x + b

        h = np.zeros((batch, units))
        c = np.zeros((batch, units))
        steps = []
        hidden = np.empty((batch, length, units))
        for t in range(length):
            z = projected[:, t, :] + h @ w_h
            i = sigmoid(z[:, :units])
            f = sigmoid(z[:, units:2 * units])
            g = np.tanh(z[:, 2 * units:3 * units])
            o = sigmoid(z[:, 3 * units:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h = o * tanh_c
            steps.append((i, f, g, o, c_prev, h_prev, tanh_c))
            hidden[:, t, :] = h

        self._cache = (x, steps)
        return hidden[:, ::-1, :] if self.direction == 'reverse' else hidden

    def backward(self, grad):
        x, steps = self._cache
        if self.direction == 'reverse':
            grad = grad[:, ::-1, :]

        batch, length, _ = x.shape
        w_x, w_h = self.params['input_weights'], self.params['recurrent_weights']
        grad_z = np.empty((batch, length, 4 * self.units))
        grad_h_next = np.zeros((batch, self.units))
        grad_c_next = np.zeros((batch, self.units))

        for t in reversed(range(length)):
            i, f, g, o, c_prev, h_prev, tanh_c = steps[t]
            grad_h = grad[:, t, :] + grad_h_next
            grad_o = grad_h * tanh_c
            grad_c = grad_h * o * (1.0 - tanh_c ** 2) + grad_c_next
            grad_i = grad_c * g
            grad_f = grad_c * c_prev
            grad_g = grad_c * i

            grad_z[:, t, :] = np.concatenate([grad_i * i * (1.0 - i),
                                              grad_f * f * (1.0 - f),
                                              grad_g * (1.0 - g ** 2),
                                              grad_o * o * (1.0 - o)], axis=1)
            self.grads['recurrent_weights'] += h_prev.T @ grad_z[:, t, :]
            grad_h_next = grad_z[:, t, :] @ w_h.T
            grad_c_next = grad_c * f

        self.grads['input_weights'] += np.einsum('blc,blg->cg', x, grad_z)
        self.grads['bias'] += grad_z.sum(axis=(0, 1))
        grad_x = grad_z @ w_x.T
        return grad_x[:, ::-1, :] if self.direction == 'reverse' else grad_x


class Bidirectional(Layer):
    """
    Forward and reverse LSTMs over the same input.
    pooling='last' concatenates the final state of each direction (the forward state at the last step,
    the reverse state at step 0); pooling='max' max-pools both full sequences over time.
    """

    def __init__(self, name, in_dim, units, rng, pooling='last'):
        super().__init__(name)
        if pooling not in ('last', 'max'):
            raise ValueError(f"Unknown pooling: {pooling}")
        self.units = units
        self.pooling = pooling
        self.forward_lstm = LSTM(f"{name}.forward", in_dim, units, rng, direction='forward')
        self.reverse_lstm = LSTM(f"{name}.reverse", in_dim, units, rng, direction='reverse')
        self.pool = GlobalMaxPool(f"{name}.pool")
        for prefix, lstm in (('forward', self.forward_lstm), ('reverse', self.reverse_lstm)):
            for key, value in lstm.params.items():
                self.params[f"{prefix}_{key}"] = value
        self.zero_grad()

    def zero_grad(self):
        if hasattr(self, 'forward_lstm'):
            self.forward_lstm.zero_grad()
            self.reverse_lstm.zero_grad()
            self._link_grads()

    def _link_grads(self):
        for prefix, lstm in (('forward', self.forward_lstm), ('reverse', self.reverse_lstm)):
            for key, value in lstm.grads.items():
                self.grads[f"{prefix}_{key}"] = value

    def forward(self, x, training=False, rng=None):
        forward_seq = self.forward_lstm.forward(x)
        reverse_seq = self.reverse_lstm.forward(x)
        self._cache = forward_seq.shape
        if self.pooling == 'last':
            return np.concatenate([forward_seq[:, -1, :], reverse_seq[:, 0, :]], axis=1)
        return self.pool.forward(np.concatenate([forward_seq, reverse_seq], axis=2))

    def backward(self, grad):
        shape = self._cache
        units = self.units
        if self.pooling == 'last':
            grad_forward = np.zeros(shape)
            grad_reverse = np.zeros(shape)
            grad_forward[:, -1, :] = grad[:, :units]
            grad_reverse[:, 0, :] = grad[:, units:]
        else:
            grad_seq = self.pool.backward(grad)
            grad_forward, grad_reverse = grad_seq[:, :, :units], grad_seq[:, :, units:]
        return self.forward_lstm.backward(grad_forward) + self.reverse_lstm.backward(grad_reverse)


class Dense(Layer):
    def __init__(self, name, in_dim, out_dim, rng, activation='none'):
        super().__init__(name)
        if activation not in ACTIVATIONS:
            raise ValueError(f"Unknown activation: {activation}")
        self.activation = activation
        self.params['weights'] = glorot_uniform(rng, in_dim, out_dim, (in_dim, out_dim))
        self.params['bias'] = np.zeros(out_dim)
        self.zero_grad()

    def forward(self, x, training=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.params['weights'].shape[0]:
            raise ShapeError(f"{self.name}: expected [batch x {self.params['weights'].shape[0]}], got {list(x.shape)}")
        pre = x @ self.params['weights'] + self.params['bias']
        if self.activation == 'relu':
            out = np.maximum(pre, 0.0)
        elif self.activation == 'softmax':
            out = softmax(pre)
        else:
            out = pre
        self._cache = (x, pre, out)
        return out

    def backward(self, grad):
        x, pre, out = self._cache
        if self.activation == 'relu':
            grad = grad * (pre > 0)
        elif self.activation == 'softmax':
            grad = out * (grad - (grad * out).sum(axis=1, keepdims=True))
        self.grads['weights'] += x.T @ grad
        self.grads['bias'] += grad.sum(axis=0)
        return grad @ self.params['weights'].T


class Dropout(Layer):
    """
    Inverted dropout: in training, zero with probability `rate` and scale survivors by 1 / (1 - rate).
    Identity at inference.
    """

    def __init__(self, name, rate):
        super().__init__(name)
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"Dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, training=False, rng=None):
        if not training or self.rate == 0.0:
            self._cache = None
            return x
        if rng is None:
            raise ValueError(f"{self.name}: training mode needs a random generator")
        mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        self._cache = mask
        return x * mask

    def backward(self, grad):
        return grad if self._cache is None else grad * self._cache


# Functional forms of the layers, for one-off evaluation with explicit parameters.
# Each builds a throwaway layer, copies the given arrays in and runs forward; a NaN or Inf result raises.

def _scratch_rng():
    return np.random.default_rng(0)


def embedding_forward(ids, table):
    table = np.asarray(table, dtype=np.float64)
    layer = Embedding('embedding', table.shape[0], table.shape[1], _scratch_rng())
    return ensure_finite("embedding output", layer.set_params(table=table).forward(ids))


def conv1d_forward(x, kernel, bias):
    kernel = np.asarray(kernel, dtype=np.float64)
    layer = Conv1D('conv1d', kernel.shape[1], kernel.shape[2], kernel.shape[0], _scratch_rng())
    layer.set_params(kernel=kernel, bias=bias)
    return ensure_finite("conv1d output", layer.forward(np.asarray(x, dtype=np.float64)))


def global_max_pool(x):
    return ensure_finite("global max pool output", GlobalMaxPool('pool').forward(np.asarray(x, dtype=np.float64)))


def lstm_forward(x, input_weights, recurrent_weights, bias, direction='forward'):
    input_weights = np.asarray(input_weights, dtype=np.float64)
    units = input_weights.shape[1] // 4
    layer = LSTM('lstm', input_weights.shape[0], units, _scratch_rng(), direction=direction)
    layer.set_params(input_weights=input_weights, recurrent_weights=recurrent_weights, bias=bias)
    return ensure_finite("lstm output", layer.forward(np.asarray(x, dtype=np.float64)))


def bilstm_forward(x, forward_params, reverse_params, pooling='last'):
    """
    :param forward_params: dict with input_weights, recurrent_weights, bias for the forward direction
    :param reverse_params: same keys for the reverse direction, shaped identically
    :return: [B x 2*units]
    """
    input_weights = np.asarray(forward_params['input_weights'], dtype=np.float64)
    layer = Bidirectional('bilstm', input_weights.shape[0], input_weights.shape[1] // 4, _scratch_rng(),
                          pooling=pooling)
    layer.set_params(**{f"forward_{key}": value for key, value in forward_params.items()},
                     **{f"reverse_{key}": value for key, value in reverse_params.items()})
    return ensure_finite("bilstm output", layer.forward(np.asarray(x, dtype=np.float64)))


def dense_forward(x, weights, bias, activation='none'):
    weights = np.asarray(weights, dtype=np.float64)
    layer = Dense('dense', weights.shape[0], weights.shape[1], _scratch_rng(), activation=activation)
    layer.set_params(weights=weights, bias=bias)
    return ensure_finite("dense output", layer.forward(np.asarray(x, dtype=np.float64)))


def dropout(x, rate, mode, rng=None):
    """
    :param mode: 'train' or 'infer'
    """
    if mode not in ('train', 'infer'):
        raise ValueError(f"Unknown dropout mode: {mode}")
    output = Dropout('dropout', rate).forward(np.asarray(x, dtype=np.float64), training=(mode == 'train'), rng=rng)
    return ensure_finite("dropout output", output)


def softmax_crossentropy(logits, targets):
    """
    Mean negative log-likelihood of integer targets under softmax(logits), computed with log-sum-exp.
    :param logits: [B x classes]
    :param targets: integer classes [B]
    :return: (loss, per-row losses, gradient w.r.t. logits)
    """
    targets = np.asarray(targets, dtype=np.int64)
    batch, classes = logits.shape
    if targets.shape != (batch,):
        raise ShapeError(f"Expected {batch} targets, got shape {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= classes):
        raise ValueError(f"Targets must be in [0, {classes})")

    ensure_finite("logits", logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    row_losses = -log_probs[np.arange(batch), targets]

    grad = np.exp(log_probs)
    grad[np.arange(batch), targets] -= 1.0
    grad /= batch
    return float(row_losses.mean()), row_losses, grad


class Adam:
    """
    Adam with bias correction. Moments are created lazily per parameter name.
    """

    def __init__(self, lr=learning_rate, beta1=beta1, beta2=beta2, epsilon=epsilon):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        """
        Update `params` in place from `grads`, both dicts of arrays keyed alike.
        """
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t

        for key, param in params.items():
            grad = grads[key]
            if grad.shape != param.shape:
                raise ShapeError(f"Gradient for {key} has shape {grad.shape}, parameter has {param.shape}")
            if key not in self.m:
                self.m[key] = np.zeros_like(param)
                self.v[key] = np.zeros_like(param)

            self.m[key] *= self.beta1
            self.m[key] += (1.0 - self.beta1) * grad
            self.v[key] *= self.beta2
            self.v[key] += (1.0 - self.beta2) * (grad * grad)

            m_hat = self.m[key] / bc1
            v_hat = self.v[key] / bc2
            param -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)
