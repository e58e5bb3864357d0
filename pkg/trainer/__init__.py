# trainer package
