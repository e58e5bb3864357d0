# utils package 