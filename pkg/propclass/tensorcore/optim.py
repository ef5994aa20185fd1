# -*- coding: utf-8 -*-

"""
propclass.tensorcore.optim
~~~~~~~~~~~~~~~~~~~~~~~~~~

Adam with decoupled weight decay, linear warm-up and gradient norm clipping.
"""

import numpy as np

from ..exceptions import ConfigError, MissingGrad


def warmup_lr(lr, step, warmup_steps):
    """The learning rate at a 1-based step: lr * min(1, step / warmup_steps). No warm-up when warmup_steps is 0."""
    if warmup_steps <= 0:
        return lr
    return lr * min(1.0, float(step) / warmup_steps)


def clip_grad_norm(params, max_norm):
    """Rescales all gradients so their global L2 norm is at most `max_norm`.

    :return: The norm before clipping.
    :rtype: float
    """
    norm = float(np.sqrt(sum(float((params.grad(name) ** 2).sum()) for name in params.names())))
    if max_norm is not None and norm > max_norm:
        factor = max_norm / norm
        for _, tensor in params.items():
            tensor.grad = tensor.grad * factor
    return norm


class Adam(object):
    """Adam over every parameter of a ParamStore.

    Each step applies decoupled weight decay (w <- w * (1 - lr * weight_decay)), then the bias-corrected Adam
    update, then zeroes the gradients.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        """Initialize the Adam object.

        :param params: The parameters to update.
        :type params: ParamStore
        :param lr: The base learning rate.
        :param beta1: The first moment decay.
        :param beta2: The second moment decay.
        :param eps: Added to the denominator.
        :param weight_decay: The decoupled weight decay factor.
        """
        if lr < 0 or not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ConfigError("adam", "lr must be >= 0 and betas within [0, 1)")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.first_moment = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.second_moment = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self, lr=None):
        """Takes one optimization step.

        :param lr: The learning rate for this step, for example from `warmup_lr()`. Defaults to the base rate.
        :raise MissingGrad: Raises if a parameter has no gradient buffer.
        """
        lr = self.lr if lr is None else lr
        for name, tensor in self.params.items():
            if tensor.grad is None:
                raise MissingGrad(name)
        self.step_count += 1
        t = self.step_count
        for name, tensor in self.params.items():
            grad = tensor.grad
            m = self.first_moment[name] = self.beta1 * self.first_moment[name] + (1.0 - self.beta1) * grad
            v = self.second_moment[name] = self.beta2 * self.second_moment[name] + (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            if self.weight_decay:
                tensor.data = tensor.data * (1.0 - lr * self.weight_decay)
            tensor.data = tensor.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)
            tensor.grad = np.zeros_like(tensor.data)
