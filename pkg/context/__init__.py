# context package
