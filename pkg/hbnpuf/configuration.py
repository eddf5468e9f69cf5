""" CONFIGURATION MODULE

    Module for handling & storing the physical parameters of a simulated PUF class.

    Config files are JSON objects using exactly the setting names below,
    unknown keys are rejected so that a typo can't silently change the physics.
"""
import json
from types import MappingProxyType

TEMPERATURE_RANGE = (-40.0, 60.0) # Supported operating range in degrees Celsius.
READOUT_MODES = ['delay_line', 'clock']

class PhysicsConfig(object):
    """ Configuration class to be passed to chip sampling and the simulator.

        Attributes:
            - settings (dict): contains each setting detailed below.
                    - tau_mean (float): mean single-inverter delay, ns.
                    - sigma_mfg (float): relative std-dev of frozen delay variation.
                    - sigma_noise (float): per-event timing jitter std-dev, ps.
                    - pulse_filter_width (float): narrowest pulse a gate propagates, ns.
                    - m_stages (int): number of inverter pairs M in the delay line.
                    - hold_cycles (int): 200 MHz clock cycles the challenge is held for.
                    - alpha_net (float): fractional network delay change per degree.
                    - alpha_dl (float): fractional delay-line delay change per degree.
                    - t_ref (float): reference temperature, degrees Celsius.
                    - readout (str): 'delay_line' or 'clock' (fixed, temperature stable clock).
                    - event_budget (int): max events processed by a single transient run.
                    - jitter_truncation (float): jitter draws are truncated at this many sigma.
                    - delay_floor (float): lower bound of the multiplicative delay variation.
    """
    def __init__(self: object, **kwargs: dict):
        """ Inititialize a configuration object holding the physics of a PUF class.

            Args:
                - kwargs: the initial settings to configure.
        """
        self.defaults = {
            "tau_mean": 0.25,
            "sigma_mfg": 0.03,
            "sigma_noise": 5.0,
            "pulse_filter_width": 0.35,
            "m_stages": 32,
            "hold_cycles": 4,
            "alpha_net": 0.001,
            "alpha_dl": 0.0011, # Slight mismatch, the delay line isn't perfectly commensurate.
            "t_ref": 20.0,
            "readout": "delay_line",
            "event_budget": 1000000,
            "jitter_truncation": 4.0,
            "delay_floor": 0.1,
        }

        self.settings = dict(self.defaults)
        self.set_config(**kwargs)

    def set_config(self: object, **kwargs: dict):
        """
            Given a set of keyword arguments, update the config settings.

            Args:
                - kwargs: a dictionary of settings to configure.

            Example
            ```python
                config.set_config(**{'sigma_noise': 0.0, 'm_stages': 16})
            ```
        """
        updated = dict(self.settings)
        for key, setting in kwargs.items():
            if not key in self.settings:
                raise KeyError("{} is not a valid configuration setting".format(key))
            updated[key] = self.__validate_type__(key, setting)
        self.__validate_ranges__(updated)
        self.settings = updated

    def get_config(self: object, key: str) -> object:
        """ Retreive a setting from the config object.

            If setting doesn't exist returns None object.

            Args:
                - key: the key of the setting.
        """
        if key in self.settings:
            return self.settings[key]
        return None

    def frozen(self) -> MappingProxyType:
        """ Read-only snapshot of the current settings, handed to chips and runs. """
        return MappingProxyType(dict(self.settings))

    def to_dict(self) -> dict:
        """ Plain dict copy of the settings, as written to config files and manifests. """
        return dict(self.settings)

    def save(self, path: str):
        """ Write the settings to a JSON config file. """
        with open(path, 'w') as config_file:
            json.dump(self.settings, config_file, indent=2, sort_keys=True)
            config_file.write('\n')

    @classmethod
    def from_dict(cls, settings: dict) -> 'PhysicsConfig':
        """ Build a config from a (possibly partial) dict of settings. """
        if not isinstance(settings, dict):
            raise TypeError("Physics config should be a JSON object, got {}"
                            .format(type(settings)))
        return cls(**settings)

    @classmethod
    def from_file(cls, path: str) -> 'PhysicsConfig':
        """ Load a JSON config file, unknown keys raise a KeyError. """
        with open(path) as config_file:
            return cls.from_dict(json.load(config_file))

    def __validate_type__(self, key, value):
        """ Perform type validation on supplied setting.

            Ints are accepted where floats are expected, bools never are.

            Args:
                - key: key of setting.
                - value: value of setting.
        """
        expected = type(self.defaults[key])
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise TypeError("Key {} should be of type {}, whilst type {} was used."
                            .format(key, expected, type(value)))
        if expected == float and isinstance(value, int):
            return float(value)
        if not expected == type(value):
            raise TypeError("Key {} should be of type {}, whilst type {} was used."
                            .format(key, expected, type(value)))
        return value

    @staticmethod
    def __validate_ranges__(settings):
        """ Perform validation that the combined settings describe a physical device.

            Args:
                - settings: the full settings dict after the update.
        """
        if settings['tau_mean'] <= 0:
            raise ValueError("tau_mean must be positive.")
        for key in ('sigma_mfg', 'sigma_noise', 'pulse_filter_width'):
            if settings[key] < 0:
                raise ValueError("{} can't be negative.".format(key))
        if settings['m_stages'] < 1:
            raise ValueError("The delay line needs at least one stage.")
        if settings['hold_cycles'] < 1:
            raise ValueError("The challenge must be held for at least one clock cycle.")
        if settings['event_budget'] < 1:
            raise ValueError("event_budget must be positive.")
        if settings['jitter_truncation'] <= 0:
            raise ValueError("jitter_truncation must be positive.")
        if not 0 < settings['delay_floor'] <= 1:
            raise ValueError("delay_floor must lie in (0, 1].")
        if not settings['readout'] in READOUT_MODES:
            raise ValueError("The readout mode {} doesn't exist".format(settings['readout']))
        for key in ('alpha_net', 'alpha_dl'):
            for temperature in TEMPERATURE_RANGE:
                if 1 + settings[key] * (temperature - settings['t_ref']) <= 0:
                    raise ValueError("{} makes delays non-positive at {} C."
                                     .format(key, temperature))

def validate_temperature(temperature: float):
    """ Raise if a temperature lies outside the supported operating range.

        Args:
            - temperature: temperature in degrees Celsius.
    """
    if isinstance(temperature, bool) or not isinstance(temperature, (int, float)):
        raise TypeError("Temperature {} should be numeric.".format(temperature))
    if not TEMPERATURE_RANGE[0] <= temperature <= TEMPERATURE_RANGE[1]:
        raise ValueError("Temperature {} C is outside the supported range {}."
                         .format(temperature, TEMPERATURE_RANGE))
