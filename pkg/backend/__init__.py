"""spectral-lift：谱插值问题的构造性提升与数值验证"""
