"""数值核心：小矩阵代数、全纯表达式、区域隶属"""
