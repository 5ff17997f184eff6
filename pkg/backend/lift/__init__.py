"""提升构造、条件检查、φ 生成与证书验证"""
