import copy
import yaml
import logging
from pathlib import Path
from typing import Dict, Any, Optional, Union

from .errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).parent.parent.parent / 'config' / 'settings.yaml'

REQUIRED_SECTIONS = ['model', 'vocab', 'training', 'beam', 'corpus', 'evaluation', 'logging']


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigManager:
    _instance = None
    _config: Dict[str, Any] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ConfigManager, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._config:
            self._load_config()

    def _load_config(self, config_path: Path = DEFAULT_CONFIG_PATH):
        """Load default configuration from YAML file"""
        try:
            if not config_path.exists():
                raise FileNotFoundError(f"Configuration file not found: {config_path}")

            with open(config_path, 'r', encoding='utf-8') as f:
                ConfigManager._config = yaml.safe_load(f) or {}

            logger.debug("Configuration loaded successfully")

        except Exception as e:
            logger.error(f"Error loading configuration: {str(e)}")
            raise

    def load_file(self, path: Union[str, Path]) -> None:
        """Merge a user configuration file (YAML or JSON) over the current values"""
        path = Path(path)
        with open(path, 'r', encoding='utf-8') as f:
            try:
                user_config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Cannot parse configuration file {path}: {e}") from e
        if not isinstance(user_config, dict):
            raise ConfigError(f"Configuration file {path} must contain a mapping")
        ConfigManager._config = _deep_merge(self._config, user_config)
        logger.info(f"Configuration merged from {path}")

    def apply_preset(self, name: str) -> None:
        """Overlay one of the named experimental regimes"""
        presets = self._config.get('presets', {})
        if name not in presets:
            raise ConfigError(f"Unknown preset: {name}")
        ConfigManager._config = _deep_merge(self._config, presets[name])
        logger.info(f"Preset '{name}' applied")

    def get(self, section: str, key: str, default: Any = None) -> Any:
        """Get a configuration value"""
        value = self._config.get(section, {}).get(key, default)
        return default if value is None else value

    def get_section(self, section: str) -> Dict[str, Any]:
        """Get an entire configuration section"""
        return dict(self._config.get(section, {}) or {})

    def set(self, section: str, key: str, value: Any):
        """Set a configuration value"""
        if section not in self._config:
            self._config[section] = {}
        self._config[section][key] = value

    def validate(self) -> bool:
        """Validate the configuration"""
        for section in REQUIRED_SECTIONS:
            if not isinstance(self._config.get(section), dict):
                logger.error(f"Missing required configuration section: {section}")
                return False

        model = self._config['model']
        for key in ('char_embedding_dim', 'hidden_size', 'decoder_layers'):
            if not isinstance(model.get(key), int) or model[key] < 1:
                logger.error(f"Invalid model setting: {key}")
                return False
        if model['decoder_layers'] not in (1, 2, 3):
            logger.error("Decoder layer count must be 1, 2 or 3")
            return False
        if len(model.get('conv_widths', [])) != len(model.get('conv_filters', [])):
            logger.error("conv_widths and conv_filters must have the same length")
            return False

        training = self._config['training']
        if not isinstance(training.get('learning_rate'), (int, float)):
            logger.error("Invalid learning rate")
            return False
        if not isinstance(training.get('batch_size'), int) or training['batch_size'] < 1:
            logger.error("Invalid batch size")
            return False
        if training.get('schedule') not in ('epochs', 'rounds'):
            logger.error("Training schedule must be 'epochs' or 'rounds'")
            return False

        vocab = self._config['vocab']
        if not isinstance(vocab.get('threshold'), int) or vocab['threshold'] < 1:
            logger.error("Invalid vocabulary threshold")
            return False

        beam = self._config['beam']
        if not isinstance(beam.get('width'), int) or beam['width'] < 1:
            logger.error("Invalid beam width")
            return False
        if not isinstance(beam.get('max_length'), int) or beam['max_length'] < 1:
            logger.error("Invalid beam max length")
            return False

        return True

    def reload(self, config_path: Optional[Path] = None):
        """Reload configuration from the defaults file, dropping merged overrides"""
        ConfigManager._config = {}
        self._load_config(config_path or DEFAULT_CONFIG_PATH)

    def get_all(self) -> Dict[str, Any]:
        """Get the entire configuration"""
        return copy.deepcopy(self._config)
