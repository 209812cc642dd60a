total = 0
for i in range(10):
    if i % 2 == 0 and i > 2:
        total += i
    elif i == 3 or not i:
        continue
    else:
        total -= 1
else:
    pass
while total > 0:
    total = total - 1
    if total < 5: break
x, y = 1, 2
data = {'a': [1, 2, 3], 'b': (4, 5)}
first = data['a'][0:2]
print(x is not None, y not in data, -x ** 2)
