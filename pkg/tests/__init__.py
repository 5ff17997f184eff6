"""测试套件初始化"""
