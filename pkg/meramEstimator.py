import logging
from dataclasses import dataclass, replace

from meramCommon import *

__version__ = '0.3'
__all__ = ['LayoutModel', 'cellArea', 'macroArea', 'calibrateOverhead', 'areaPerBitF2',
           'MERAM_LAYOUT', 'SRAM_LAYOUT', 'LAYOUT_MODELS', 'L2_CAPACITY_BITS']


meramEstimatorLogger = logging.getLogger('__main__')


# nm^2 in a mm^2
_NM2_PER_MM2 = 1e12


# 4 MiB expressed in bits
L2_CAPACITY_BITS = 4 * 1024 * 1024 * 8


@dataclass(frozen=True)
class LayoutModel:
    """
    lambda_nm is half of the minimum feature size.  peripheral_overhead is
    the fractional area added on top of the bare cell array; it must stay
    above -1 so that the macro keeps a positive area.
    """

    lambda_nm: float = 22.5
    cell_area_lambda2: float = 640.0
    peripheral_overhead: float = 0.0

    def __post_init__(self):
        checkPositive('lambda_nm', self.lambda_nm)
        checkPositive('cell_area_lambda2', self.cell_area_lambda2)
        if not self.peripheral_overhead > -1.0:
            raise ValidationError("peripheral_overhead must be > -1, got %r" % self.peripheral_overhead)


MERAM_LAYOUT = LayoutModel(cell_area_lambda2=640.0)     # 40 x 16 lambda
SRAM_LAYOUT = LayoutModel(cell_area_lambda2=2000.0)     # 6T baseline

# Technologies with a cell layout
LAYOUT_MODELS = {'MERAM': MERAM_LAYOUT,
                 'SRAM': SRAM_LAYOUT}


def cellArea(model):
    """
    Return the area of one cell in nm^2.
    """

    return model.cell_area_lambda2 * model.lambda_nm**2


def macroArea(capacity_bits, model):
    """
    Return the area in mm^2 of a macro holding capacity_bits cells, including
    the peripheral overhead.
    """

    checkPositive('capacity_bits', capacity_bits)

    return capacity_bits * cellArea(model) * (1.0 + model.peripheral_overhead) / _NM2_PER_MM2


def calibrateOverhead(capacity_bits, target_area_mm2, model):
    """
    Return the peripheral overhead that makes macroArea() hit target_area_mm2
    exactly.  A negative result means the target is smaller than the bare
    cell array; it is logged as a model inconsistency and returned as is.
    """

    checkPositive('target_area_mm2', target_area_mm2)

    bare = macroArea(capacity_bits, replace(model, peripheral_overhead=0.0))
    overhead = target_area_mm2 / bare - 1.0
    if overhead < 0:
        meramEstimatorLogger.warning('Target macro area %.4g mm^2 is below the bare cell array area %.4g mm^2 (overhead %.4f); the layout and macro figures are inconsistent',
                                     target_area_mm2, bare, overhead)

    return overhead


def areaPerBitF2(area_mm2, capacity_bits, lambda_nm=22.5):
    """
    Return the area per bit in units of F^2, with F = 2*lambda.
    """

    checkPositive('area_mm2', area_mm2)
    checkPositive('capacity_bits', capacity_bits)
    checkPositive('lambda_nm', lambda_nm)

    f2 = (2.0 * lambda_nm)**2
    return area_mm2 * _NM2_PER_MM2 / capacity_bits / f2
