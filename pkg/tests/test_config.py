"""
配置管理的单元测试
"""

import os
import json
import tempfile
import unittest
from unittest.mock import patch

from covol_ldp.config import settings
from covol_ldp.utils import config
from covol_ldp.utils.validators import validate_direction, validate_seed


class TestLoadConfig(unittest.TestCase):
    def setUp(self):
        self.saved = dict(config._config)

    def tearDown(self):
        config._config.clear()
        config._config.update(self.saved)

    def test_defaults_come_from_settings(self):
        for key, value in config.DEFAULT_CONFIG.items():
            with self.subTest(key=key):
                self.assertEqual(value, getattr(settings, key))

    def test_environment_override(self):
        with patch.dict(os.environ, {"COVOL_LDP_MAX_WORKERS": "2", "COVOL_LDP_LDP_GAP_TOLERANCE": "0.2"}):
            config.load_config()
        self.assertEqual(config.get_setting("MAX_WORKERS"), 2)
        self.assertEqual(config.get_setting("LDP_GAP_TOLERANCE"), 0.2)

    def test_invalid_environment_value_ignored(self):
        before = config.get_setting("MIN_TAIL_REPS")
        with patch.dict(os.environ, {"COVOL_LDP_MIN_TAIL_REPS": "many"}):
            config.load_config()
        self.assertEqual(config.get_setting("MIN_TAIL_REPS"), before)

    def test_config_file(self):
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
            json.dump({"OUTPUT_DIR": "elsewhere"}, f)
        try:
            config.load_config(f.name)
            self.assertEqual(config.get_setting("OUTPUT_DIR"), "elsewhere")
        finally:
            os.remove(f.name)


class TestValidators(unittest.TestCase):
    def test_seed(self):
        self.assertTrue(validate_seed(0)[0])
        self.assertFalse(validate_seed(-1)[0])
        self.assertFalse(validate_seed(True)[0])

    def test_direction(self):
        self.assertTrue(validate_direction((1.0, 0.0, 0.0))[0])
        self.assertFalse(validate_direction((0.0, 0.0, 0.0))[0])
        self.assertFalse(validate_direction((1.0, 0.0))[0])
        self.assertFalse(validate_direction((float("nan"), 0.0, 0.0))[0])


if __name__ == "__main__":
    unittest.main()
