from abc import ABC, abstractmethod
from typing import List, NamedTuple, Optional

import numpy as np

from modules.circuit.simulator import denoise_image_circuit
from modules.quantize.kernels import Kernel
from modules.seconv.data_classes import (ModelImpl, RunParams, StagePlan, StageTrace, DivergenceCounters,
                                         CircuitParams, DeviceParams)
from modules.seconv.reference import cascade, resolve_stage_kernel
from modules.utils.logger import get_logger

logger = get_logger()


class DenoiseResult(NamedTuple):
    a_hat: np.ndarray
    traces: List[StageTrace]
    divergence: DivergenceCounters


class BaseDenoiser(ABC):
    def __init__(self,
                 model: ModelImpl,
                 plan: StagePlan,
                 kernels: List[Kernel],
                 circuit: CircuitParams,
                 device: DeviceParams):
        self.model = ModelImpl(model)
        self.plan = plan
        self.kernels = kernels
        self.circuit = circuit
        self.device = device

    @abstractmethod
    def denoise(self, a_tilde: np.ndarray) -> DenoiseResult:
        pass


class ReferenceDenoiser(BaseDenoiser):
    """Ideal arithmetic: FPSC and TSC, or the zero-to-one formulation for MSCE."""

    def denoise(self, a_tilde: np.ndarray) -> DenoiseResult:
        a_hat, traces = cascade(a_tilde, self.plan, self.model, self.kernels, workers=self.circuit.workers)
        return DenoiseResult(a_hat, traces, DivergenceCounters())


class CircuitDenoiser(BaseDenoiser):
    def denoise(self, a_tilde: np.ndarray) -> DenoiseResult:
        run = denoise_image_circuit(a_tilde, self.model, self.plan, self.circuit, self.device, self.kernels)
        return DenoiseResult(run.a_hat, run.traces, run.divergence)


class DenoiserFactory:
    @staticmethod
    def create_denoiser(model: ModelImpl,
                        params: Optional[RunParams] = None,
                        kernels: Optional[List[Kernel]] = None,
                        theory: bool = False) -> BaseDenoiser:
        """
        Create a denoiser for ``model``.

        Parameters
        ----------
        model : ModelImpl
            FPSC and TSC always run the ideal arithmetic. MSC and MSCE run the
            circuit simulation unless ``theory`` is set, in which case MSC
            falls back to TSC and MSCE to its zero-to-one formulation.
        params : RunParams
            Stage plan, weights, quantization flag, circuit and device parameters.
        kernels : List[Kernel]
            Stage kernels overriding the ones named by the plan.
        theory : bool
            Use the ideal counterpart of a circuit model.

        Returns
        -------
        BaseDenoiser
        """
        params = params or RunParams()
        model = ModelImpl(model)
        plan = params.stages

        if kernels is None:
            names = [params.weights or stage.kernel for stage in plan.stages]
            kernels = [resolve_stage_kernel(name, model, params.quantize) for name in names]

        if model in (ModelImpl.FPSC, ModelImpl.TSC):
            return ReferenceDenoiser(model, plan, kernels, params.circuit, params.device)
        if theory:
            ideal = ModelImpl.TSC if model == ModelImpl.MSC else ModelImpl.MSCE
            return ReferenceDenoiser(ideal, plan, kernels, params.circuit, params.device)
        return CircuitDenoiser(model, plan, kernels, params.circuit, params.device)
