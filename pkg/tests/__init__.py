# lsselflearn tests
