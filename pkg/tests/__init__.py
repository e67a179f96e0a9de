# 测试包初始化文件
from covol_ldp.utils.config import get_setting, set_setting


def override_setting(case, key, value):
    """在测试期间临时修改一个配置项"""
    previous = get_setting(key)
    set_setting(key, value)
    case.addCleanup(set_setting, key, previous)
