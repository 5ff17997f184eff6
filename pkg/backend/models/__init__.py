"""数据模型初始化"""
