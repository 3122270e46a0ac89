'''
SI <-> Hartree atomic unit conversion and parsing of quantity strings such as
"50fs", "800 nm" or "1 mJ/cm2".
'''
import math
import re

from scipy import constants as codata

from utils.errors import ConfigurationError

_pc = codata.physical_constants

BOHR = _pc['Bohr radius'][0]
AU_TIME = _pc['atomic unit of time'][0]
HARTREE = _pc['Hartree energy'][0]
AU_FIELD = _pc['atomic unit of electric field'][0]
AU_MAGNETIC = _pc['atomic unit of mag. flux density'][0]

# one atomic unit of each dimension expressed in SI
ATOMIC_SCALE = {
    'length': BOHR,
    'time': AU_TIME,
    'energy': HARTREE,
    'electric_field': AU_FIELD,
    'fluence': HARTREE / BOHR ** 2,
    'frequency': 1.0 / AU_TIME,
    'wavevector': 1.0 / BOHR,
    'magnetic_field': AU_MAGNETIC,
    'vector_potential': AU_MAGNETIC * BOHR,
}

DIMENSIONS = tuple(ATOMIC_SCALE)

# unit symbol -> SI multiplier, per dimension
UNITS = {
    'length': {
        'm': 1.0, 'cm': 1e-2, 'mm': 1e-3, 'um': 1e-6, 'nm': 1e-9, 'pm': 1e-12,
        'A': codata.angstrom, 'angstrom': codata.angstrom, 'bohr': BOHR, 'au': BOHR,
    },
    'time': {
        's': 1.0, 'ms': 1e-3, 'us': 1e-6, 'ns': 1e-9, 'ps': 1e-12, 'fs': 1e-15, 'as': 1e-18,
        'au': AU_TIME,
    },
    'energy': {
        'J': 1.0, 'eV': codata.eV, 'meV': 1e-3 * codata.eV, 'keV': 1e3 * codata.eV,
        'hartree': HARTREE, 'Ha': HARTREE, 'au': HARTREE,
    },
    'electric_field': {
        'V/m': 1.0, 'V/cm': 1e2, 'V/nm': 1e9, 'V/A': 1e10, 'au': AU_FIELD,
    },
    'fluence': {
        'J/m2': 1.0, 'J/cm2': 1e4, 'mJ/cm2': 10.0, 'uJ/cm2': 1e-2, 'au': HARTREE / BOHR ** 2,
    },
    'frequency': {
        'rad/s': 1.0, 'Hz': 2.0 * math.pi, 'THz': 2.0 * math.pi * 1e12, 'PHz': 2.0 * math.pi * 1e15,
        'au': 1.0 / AU_TIME,
    },
    'wavevector': {
        '1/m': 1.0, '1/nm': 1e9, '1/A': 1e10, '1/bohr': 1.0 / BOHR, 'au': 1.0 / BOHR,
    },
    'magnetic_field': {
        'T': 1.0, 'mT': 1e-3, 'G': 1e-4, 'au': AU_MAGNETIC,
    },
    'vector_potential': {
        'T*m': 1.0, 'V*s/m': 1.0, 'au': AU_MAGNETIC * BOHR,
    },
}

_QUANTITY = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s].*)?$')


def _check_dimension(dimension):
    if dimension not in ATOMIC_SCALE:
        raise ConfigurationError(
            f'unknown dimension {dimension!r}; expected one of {", ".join(DIMENSIONS)}',
            dimension=dimension,
        )


def to_atomic(value, dimension):
    _check_dimension(dimension)
    return value / ATOMIC_SCALE[dimension]


def to_si(value, dimension):
    _check_dimension(dimension)
    return value * ATOMIC_SCALE[dimension]


def convert(value, dimension, target='atomic'):
    '''
    Convert `value` of the given physical dimension between SI and atomic units.
    `target='atomic'` reads `value` as SI, `target='si'` reads it as atomic.
    '''
    if target == 'atomic':
        return to_atomic(value, dimension)
    if target == 'si':
        return to_si(value, dimension)
    raise ConfigurationError(f'unknown unit system {target!r}; expected "atomic" or "si"')


def parse_quantity(text, dimension, system='atomic'):
    '''
    Parse a number with an optional unit ("800nm", "50 fs", "1e3 T", 0.5). A bare
    number is read in the SI base unit of the dimension. Returns the value in
    `system` units.
    '''
    _check_dimension(dimension)
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        si_value = float(text)
    else:
        match = _QUANTITY.match(str(text))
        if not match:
            raise ConfigurationError(f'cannot parse quantity {text!r} as {dimension}')
        number, unit = match.groups()
        unit = (unit or '').strip()
        if not unit:
            si_value = float(number)
        else:
            table = UNITS[dimension]
            if unit not in table:
                raise ConfigurationError(
                    f'unknown {dimension} unit {unit!r}; known units: {", ".join(table)}',
                    dimension=dimension,
                )
            si_value = float(number) * table[unit]
    return si_value if system == 'si' else to_atomic(si_value, dimension)


def parse_vector(values, dimension, system='atomic'):
    if values is None:
        return None
    if isinstance(values, (str, int, float)) or len(values) != 3:
        raise ConfigurationError(f'expected three {dimension} components, got {values!r}')
    return tuple(parse_quantity(v, dimension, system) for v in values)


def read_quantity(value, dimension, units='si'):
    '''
    Scenario reading of a quantity: strings carry their own unit, bare numbers
    are read in `units` ('si' or 'atomic'). Returns atomic units.
    '''
    if units not in ('si', 'atomic'):
        raise ConfigurationError(f'unknown unit system {units!r}; expected "atomic" or "si"')
    if units == 'atomic' and isinstance(value, (int, float)) and not isinstance(value, bool):
        _check_dimension(dimension)
        return float(value)
    return parse_quantity(value, dimension)
