"""
工具函数包：错误类型、命名随机流、JSON 读写、图像辅助与命令日志装饰器
"""
