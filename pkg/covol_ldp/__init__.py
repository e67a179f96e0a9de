"""
阈值估计量偏差分析工具

模拟二维跳跃扩散过程，计算积分(协)波动率向量的阈值估计量，
求值大偏差与中偏差速率函数，并用精确参照与蒙特卡洛验证理论预测
"""

__version__ = "1.0.0"
__author__ = "Your Name"
__email__ = "your.email@example.com"
