# trainer/optim.py

from __future__ import annotations

import numpy as np
import torch


class AdamOptimizer:
    """torch Adam over a float64 parameter vector; gradients come from the circuit, not autograd."""

    def __init__(self, params: np.ndarray, lr: float):
        self.lr = lr
        self._param = torch.nn.Parameter(torch.from_numpy(np.array(params, dtype=np.float64)))
        self._opt = torch.optim.Adam([self._param], lr=lr)

    @property
    def params(self) -> np.ndarray:
        return self._param.detach().numpy().copy()

    def step(self, grad: np.ndarray) -> np.ndarray:
        self._param.grad = torch.from_numpy(np.array(grad, dtype=np.float64))
        self._opt.step()
        self._opt.zero_grad(set_to_none=True)
        return self.params

    def state(self) -> dict:
        st = self._opt.state.get(self._param, {})
        if not st:
            zeros = np.zeros(self._param.numel())
            return {"step": 0, "exp_avg": zeros, "exp_avg_sq": zeros.copy()}
        return {
            "step": int(float(st["step"])),
            "exp_avg": st["exp_avg"].detach().numpy().copy(),
            "exp_avg_sq": st["exp_avg_sq"].detach().numpy().copy(),
        }

    def load_state(self, step: int, exp_avg: np.ndarray, exp_avg_sq: np.ndarray) -> None:
        if step <= 0:
            return
        sd = self._opt.state_dict()
        sd["state"] = {
            0: {
                "step": torch.tensor(float(step)),
                "exp_avg": torch.from_numpy(np.array(exp_avg, dtype=np.float64)),
                "exp_avg_sq": torch.from_numpy(np.array(exp_avg_sq, dtype=np.float64)),
            }
        }
        self._opt.load_state_dict(sd)
